import sys

from curesimex.cli.main import main

sys.exit(main())
