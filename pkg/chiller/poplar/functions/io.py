'''Functions for input/output tasks.

'''
import os
import json
from logging import getLogger

import pandas as pd


logger = getLogger(__name__)


# CSV floats keep 12 significant digits
FLOAT_FORMAT = '%.12g'


def setup_directories(dirpath_list):
    '''
    Checks if directories exist; creates them if not.
    Creates intermediate directories if necessary.

    Args:
        dirpath_list (str or list): List of directory paths (str) to create.
            Can also be a single path (str).

    Returns:
        None

    Raises:
        OSError: if a directory cannot be created.
    '''
    if isinstance(dirpath_list, str):
        dirpath_list = [dirpath_list]
    for d in dirpath_list:
        if os.path.isdir(d):
            logger.debug('Directory %s already exists.', d)
            continue
        try:
            os.makedirs(d)
        except OSError as e:
            raise OSError(f'Unable to create directory {d}: {e}') from e


def write_json(dictionary, name, dirpath, indent = 4):
    '''
    Writes a dictionary to a JSON file.

    Args:
        dictionary (dict or OrderedDict):  Dictionary to write.
        name (str):  Name for the file to create, without extension.
        dirpath (str):  Path to location for the JSON file.
        indent (int):  Indentation for pretty printing.

    Returns:
        filepath (str): Path to the JSON file.

    Raises:
        OSError: if the file cannot be written.
    '''
    filepath = os.path.join(dirpath, name + '.json')
    try:
        with open(filepath, 'w') as f:
            json.dump(dictionary, f, indent = indent)
    except OSError as e:
        raise OSError(f'Unable to write JSON file {filepath}: {e}') from e
    return filepath


def read_json(filepath):
    '''
    Read a JSON file into a dictionary.

    Args:
        filepath (str):  Path to JSON file.

    Returns:
        dictionary (dict): The deserialized contents of
            the JSON file.

    Raises:
        OSError: if the file cannot be read.
    '''
    try:
        with open(filepath, 'r') as f:
            return json.load(f)
    except OSError as e:
        raise OSError(f'Unable to read JSON file {filepath}: {e}') from e


def write_csv(df, name, dirpath):
    '''
    Writes a dataframe to a csv file with 12 significant digits.
    Overwrites a file with the same name.

    Args:
        df (pandas.DataFrame):  Table to write; columns become the header.
        name (str):  Name of csv file to create, without extension.
        dirpath (str):  Path to location for csv file.

    Returns:
        filepath (str): Path to the new csv file.

    Raises:
        OSError: if the file cannot be written.
    '''
    filepath = os.path.join(dirpath, name + '.csv')
    if os.path.exists(filepath):
        logger.warning('Overwriting existing file %s.', filepath)
    try:
        df.to_csv(filepath, index = False, float_format = FLOAT_FORMAT)
    except OSError as e:
        raise OSError(f'Unable to write CSV file {filepath}: {e}') from e
    return filepath


def read_csv(filepath):
    '''
    Reads a csv file written by write_csv.

    Args:
        filepath (str): Path to a csv file.

    Returns:
        df (pandas.DataFrame)

    Raises:
        OSError: if the file cannot be read.
    '''
    try:
        return pd.read_csv(filepath)
    except OSError as e:
        raise OSError(f'Unable to read CSV file {filepath}: {e}') from e
