# fracshape/__main__.py
from fracshape.main import cli

cli()
