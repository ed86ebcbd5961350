# -*- coding: utf-8 -*-
from __future__ import annotations

import sys
from pathlib import Path

from paramcsi.app import ParamCsiApp


def main() -> None:
    base_dir = Path(__file__).resolve().parent
    app = ParamCsiApp(base_dir)
    sys.exit(app.run())


if __name__ == "__main__":
    main()
