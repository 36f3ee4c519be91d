# Sphinx configuration for the wavelab documentation.
#
# Build with: uv run --group docs sphinx-build docs docs/_build/html

import sys

from importlib import metadata
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

# -- Project -----------------------------------------------------------------

project = "wavelab"
author = "Wave Lab contributors"
copyright = f"2026 {author}"

release = metadata.version("supercritical-wave-lab")
version = release.rsplit(".", 1)[0]

# -- Extensions --------------------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",  # Google-style docstrings
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",  # Formulas in docstrings and pages
    "sphinx_autodoc_typehints",
    "sphinx_click",  # CLI reference from wavelab.cli:main
    "sphinx_design",
    "myst_parser",
]

exclude_patterns = ["_build", ".DS_Store"]

html_theme = "sphinx_book_theme"
html_title = f"wavelab {version}"
html_theme_options = {
    "show_toc_level": 2,
    "show_navbar_depth": 1,
    "navigation_with_keys": True,
}

# -- Autodoc -----------------------------------------------------------------

napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_attr_annotations = True

autodoc_default_options = {
    "members": True,
    "member-order": "bysource",
    "exclude-members": "__weakref__",
}
autodoc_typehints = "description"

# Array and solver types in signatures link to their upstream docs
intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
}

myst_enable_extensions = ["colon_fence", "deflist", "dollarmath"]
myst_heading_anchors = 2
