"""voxelflow: a declarative, config-driven deep-learning experiment engine
for volumetric imaging.

Data points travel the pipeline as Records (ordered field -> value maps);
transforms are single-responsibility Record functions; workflows route
batch fields to models, losses and metrics by name and emit epoch events
consumed by hooks.
"""

__version__ = "0.1.0"
