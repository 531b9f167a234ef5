"""Utilities for the linkfair package.
"""

__all__ = ['get_tqdm', 'form_opt', 'try_parse', 'load_config',
           'get_receiver_sections', 'parse_list', 'nan_to_none']

import numpy as np
from ast import literal_eval
import os
from configparser import ConfigParser
import math
import sys


def get_tqdm(progress: bool = True):
    """Return the appropriate tqdm based on the execution environment.
    """
    if not progress:
        def custom_tqdm(args, **kwargs):
            return args
        return custom_tqdm
    if 'ipykernel' in sys.modules:
        # Running in Jupyter Notebook/Lab
        from tqdm.notebook import tqdm
    else:
        # Running in a terminal or other non-notebook environment
        from tqdm import tqdm
    return tqdm


def form_opt(x, **kws) -> str:
    """Utility to format options in config.

    Parameters
    ----------
    x : str, float, list, or tuple
        The option to format.
    kws : dict
        Additional keyword arguments to pass to np.array2string.

    Returns
    -------
    str
        The formatted option.
    """
    if isinstance(x, str):
        return x
    if isinstance(x, (list, tuple)) and any(isinstance(i, (list, tuple))
                                            for i in x):
        # nested sequences (e.g., rate intervals) are kept as literals
        return repr(type(x)(tuple(i) if isinstance(i, list) else i
                            for i in x))
    # shortest repr that reads back to the same float
    kws.setdefault('floatmode', 'unique')
    return np.array2string(np.array(x), separator=', ', **kws)


def try_parse(x):
    """Attempt to parse a string as a number, dict, or list."""
    try:
        return float(x)
    except (TypeError, ValueError):
        try:
            return literal_eval(x)
        except (TypeError, ValueError, SyntaxError):
            if x == "inf":
                return np.inf
            else:
                return x


def parse_list(x) -> list:
    """Parse an option that may be a literal list or a comma-separated
    string, e.g. ``proposed, epa`` or ``['proposed', 'epa']``.
    """
    if isinstance(x, str):
        try:
            x = literal_eval(x)
        except (ValueError, SyntaxError):
            return [i.strip() for i in x.split(',') if i.strip()]
    if isinstance(x, (str, float, int)):
        return [x]
    return list(x)


def load_config(config_input):
    if isinstance(config_input, (str, os.PathLike)):
        if os.path.exists(config_input):
            raw_config = ConfigParser()
            raw_config.read(config_input)

            # make subsitutions in case variables are defined in
            # in DEFAULT section
            config = ConfigParser(defaults=None)
            for section in raw_config.sections():
                config.add_section(section)
                for key, value in raw_config.items(section):
                    if key not in raw_config.defaults():
                        config.set(section, key, value)
        else:
            raise FileNotFoundError(config_input)
    elif isinstance(config_input, ConfigParser):
        config = config_input
    else:
        raise TypeError(f"cannot load config from {type(config_input)}")
    return config


def get_receiver_sections(config) -> dict:
    """Map receiver numbers (1-based) to config section names of the form
    ``receiver-N``.
    """
    sections = {}
    for section in config.sections():
        if section.startswith('receiver-'):
            try:
                sections[int(section.split('-', 1)[1])] = section
            except ValueError:
                continue
    return dict(sorted(sections.items()))


def nan_to_none(x):
    """Recursively replace NaN floats by `None` so that JSON output is
    standards compliant.
    """
    if isinstance(x, dict):
        return {k: nan_to_none(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [nan_to_none(v) for v in x]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if math.isnan(x) else x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x
