"""
Initialize src package
"""
__version__ = "1.0.0"
__author__ = "HigherHolonomy"

from .utils import Config, Logger, Issue
from .graded_linear import EXACT, DOUBLE, GradedModule, GradedMap, ChainComplex, cohomology, mapping_cone
from .simplicial import Simplex, Horn, SimplicialComplex
from .locsys import InfinityLocalSystem, LocSysMorphism, LocalSystemEngine
from .nerve import SmallDgCategory, NerveSimplex, NerveEngine
from .superconn import Bundle, ChartDomain, Superconnection, SuperconnMorphism, SuperconnEngine
from .holonomy import QuadratureScheme, HolonomyValue, HolonomyEngine

__all__ = [
    'Config',
    'Logger',
    'Issue',
    'EXACT',
    'DOUBLE',
    'GradedModule',
    'GradedMap',
    'ChainComplex',
    'cohomology',
    'mapping_cone',
    'Simplex',
    'Horn',
    'SimplicialComplex',
    'InfinityLocalSystem',
    'LocSysMorphism',
    'LocalSystemEngine',
    'SmallDgCategory',
    'NerveSimplex',
    'NerveEngine',
    'Bundle',
    'ChartDomain',
    'Superconnection',
    'SuperconnMorphism',
    'SuperconnEngine',
    'QuadratureScheme',
    'HolonomyValue',
    'HolonomyEngine'
]
