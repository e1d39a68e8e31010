"""k-Hessian 数値ツールのコマンドライン入口"""

import sys

from khessian.cli import main

if __name__ == "__main__":
    sys.exit(main())
