#coding: utf-8

import csv
import json

import numpy as np
import yaml


def to_plain(v):
    ''' numpy scalars and arrays to builtin python values, recursively. '''
    if isinstance(v, dict):
        return dict((str(k), to_plain(x)) for k, x in v.items())
    if isinstance(v, (list, tuple)):
        return [to_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return to_plain(v.tolist())
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def _cell(v):
    v = to_plain(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def read_csv(path):
    ''' (header, rows) with every cell as a string. '''
    with open(path, newline="") as f:
        r = list(csv.reader(f))
    return r[0], r[1:]


def write_json(path, obj):
    with open(path, "w") as f:
        json.dump(to_plain(obj), f, sort_keys=True, indent=2)
        f.write("\n")


def read_json(path):
    with open(path) as f:
        return json.load(f)


def write_yaml(path, obj):
    with open(path, "w") as f:
        yaml.safe_dump(to_plain(obj), f, sort_keys=True, default_flow_style=False)


def flatten(d, prefix=""):
    ''' Nested dict to [(dotted key, scalar)], keys sorted; lists are indexed. '''
    r = []; r_append = r.append
    items = sorted(d.items()) if isinstance(d, dict) else list(enumerate(d))
    for k, v in items:
        key = "%s.%s" % (prefix, k) if prefix else str(k)
        if isinstance(v, (dict, list, tuple)):
            r.extend(flatten(v, key))
        else:
            r_append((key, v))
    return r
