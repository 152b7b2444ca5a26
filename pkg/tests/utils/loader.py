import json
import os.path


def data_path(base_dir_path, file_path):
    return os.path.join(base_dir_path, file_path)


def load_json(base_dir_path, file_path):
    with open(data_path(base_dir_path, file_path), "rb") as fp:
        return json.loads(fp.read().decode("utf-8"))
