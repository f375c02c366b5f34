"""Console entrypoint: ``python design_cli.py solve --space x1 --n 100``."""

import sys
from collections.abc import Sequence


def main(argv: Sequence[str] | None = None) -> int:
    args = list(sys.argv if argv is None else argv)

    from cocktail.cli import main as cli_main

    return cli_main(args[1:])


if __name__ == '__main__':
    sys.exit(main())
