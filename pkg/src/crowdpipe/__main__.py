"""Allow ``python -m crowdpipe`` as an alias for the ``crowdpipe`` script."""

from .cli import main

if __name__ == "__main__":
    main()
