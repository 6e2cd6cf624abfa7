"""Maurer-Cartan calculus, star products, gauge actions and L-infinity morphisms."""

from .dgla import MCElement, PolydiffDGLA, PolyvectorDGLA, SeriesDGLA, base_algebra, mc_residual
from .gauge import (
    STAR_GAUGE_SIGN,
    GaugeWindow,
    gauge_act_mc,
    gauge_action,
    gauge_compare_mc,
    gauge_compare_star,
    gauge_search,
)
from .star import (
    GaugeElement,
    StarProduct,
    associator_operator,
    gauge_act_star,
    mc_from_star,
    star_associator,
    star_first_order_bracket,
    star_from_mc,
    star_multiply,
)
from .linfty import (
    CATALOG_KINDS,
    LInftyMorphism,
    LInftyReport,
    catalog_morphism,
    compose_linfty,
    linfty_check,
    linfty_mc_push,
    linfty_twist,
)

__all__ = [
    "CATALOG_KINDS",
    "STAR_GAUGE_SIGN",
    "GaugeElement",
    "GaugeWindow",
    "LInftyMorphism",
    "LInftyReport",
    "MCElement",
    "PolydiffDGLA",
    "PolyvectorDGLA",
    "SeriesDGLA",
    "StarProduct",
    "associator_operator",
    "base_algebra",
    "catalog_morphism",
    "compose_linfty",
    "gauge_act_mc",
    "gauge_act_star",
    "gauge_action",
    "gauge_compare_mc",
    "gauge_compare_star",
    "gauge_search",
    "linfty_check",
    "linfty_mc_push",
    "linfty_twist",
    "mc_from_star",
    "mc_residual",
    "star_associator",
    "star_first_order_bracket",
    "star_from_mc",
    "star_multiply",
]
