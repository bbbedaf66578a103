"""This module contains simple helper functions """
import os
import re

import numpy as np


def diagnose_network(net, name='network'):
    """Print the mean absolute gradient over the parameters of <net> that hold one"""
    grads = [np.abs(p.grad).mean() for p in net.parameters() if p.grad is not None]
    print('%s: mean |grad| = %.6g over %d tensors' % (name, np.mean(grads) if grads else 0.0, len(grads)))


def parse_seeds(text):
    """'1..10' (inclusive range), '1,2,5' or a mix like '1..3,7' -> sorted unique seed list"""
    seeds = set()
    for part in filter(None, (p.strip() for p in str(text).split(','))):
        match = re.fullmatch(r'(-?\d+)\.\.(-?\d+)', part)
        if match:
            low, high = int(match.group(1)), int(match.group(2))
            if high < low:
                raise ValueError('seed range %r is empty' % part)
            seeds.update(range(low, high + 1))
        elif re.fullmatch(r'-?\d+', part):
            seeds.add(int(part))
        else:
            raise ValueError('seed list entry %r is not an integer or a range a..b' % part)
    if not seeds:
        raise ValueError('at least one seed is required')
    return sorted(seeds)


def mkdirs(paths):
    """create empty directories if they don't exist

    Parameters:
        paths (str list) -- a list of directory paths
    """
    if isinstance(paths, list) and not isinstance(paths, str):
        for path in paths:
            mkdir(path)
    else:
        mkdir(paths)


def mkdir(path):
    """create a single empty directory if it didn't exist

    Parameters:
        path (str) -- a single directory path
    """
    if not os.path.exists(path):
        os.makedirs(path)
