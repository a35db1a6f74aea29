# keeps tests/reference.py importable from the test modules
