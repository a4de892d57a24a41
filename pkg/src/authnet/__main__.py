import sys

from authnet.cli import main

sys.exit(main())
