# stare_kg/__main__.py
from stare_kg.cli import stare

stare(prog_name="stare")
