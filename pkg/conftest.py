collect_ignore = ["src/pn2sc/__main__.py"]
