import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
SRC = HERE.parent / "src"
PRIMARY_SRC = HERE.parent.parent / "src"
for path in (str(SRC), str(PRIMARY_SRC)):
    if path not in sys.path:
        sys.path.insert(0, path)
