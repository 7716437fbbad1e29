from app.cli import analysis, bounds, evolve, pullin, sweep

COMMAND_MODULES = (bounds, pullin, evolve, sweep, analysis)
