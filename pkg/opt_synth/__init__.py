from .api.objective import get_objective, list_objectives
from .api.search import astar_synthesize, bfs_synthesize, synthesize
from .dsls import get_space, list_dsls
