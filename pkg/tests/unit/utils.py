import os.path

from tests.utils import data_path, load_json

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")


def load_data(file_path):
    return load_json(DATA_DIR, file_path)


def data_file(file_path):
    return data_path(DATA_DIR, file_path)
