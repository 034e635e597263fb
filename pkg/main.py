import sys

from seeg_pretrain.pipeline.cli import dispatch

if __name__ == "__main__":
    sys.exit(dispatch(sys.argv[1:]))
