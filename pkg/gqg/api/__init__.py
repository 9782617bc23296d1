from .cli import build_parser, dispatch
