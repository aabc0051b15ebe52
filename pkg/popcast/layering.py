"""Split the bandwidth of a session into a scalable video layer plan.

The base layer carries $\\beta_{min}$, the rest is filled with whole enhancement layers; a receiver can't subscribe to a
fraction of a layer, what doesn't fill a complete layer is reported as residual.
"""
import math
from dataclasses import dataclass
from typing import List, Optional

from .allocation import Allocation
from .errors import BandwidthOutOfRange
from .parameters import SystemConfig

__all__ = ["LayerPlan", "plan_layers", "plan_allocation"]


@dataclass(frozen=True)
class LayerPlan:
    """The layers of one session.

    Parameters:
        base_kbps (float): The bandwidth of the base layer.
        enhancement_count (int): The number of whole enhancement layers.
        enhancement_kbps (float): The bandwidth of one enhancement layer.
        residual_kbps (float): The allocated bandwidth that doesn't fill a whole layer.
    """
    base_kbps: float
    enhancement_count: int
    enhancement_kbps: float
    residual_kbps: float

    @property
    def layer_count(self) -> int:
        """The number of layers including the base layer."""
        return 1 + self.enhancement_count

    @property
    def decodable_kbps(self) -> float:
        """The bandwidth a receiver of all whole layers decodes."""
        return self.base_kbps + self.enhancement_count * self.enhancement_kbps


def plan_layers(beta_kbps: float, config: SystemConfig, granularity_kbps: Optional[float] = None) -> LayerPlan:
    """Make the layer plan for a session with the allocated bandwidth `beta_kbps`.

    Parameters:
        beta_kbps (float): The allocated bandwidth, between $\\beta_{min}$ and $\\beta_{max}$.
        config (SystemConfig): The link configuration.
        granularity_kbps (Optional[float]): The bandwidth of one enhancement layer,
            `config.layer_granularity_kbps` if not given.
    """
    granularity = config.layer_granularity_kbps if granularity_kbps is None else granularity_kbps
    if not granularity > 0:
        raise BandwidthOutOfRange(f"the layer granularity must be positive, {granularity!r} given")
    if not config.beta_min_kbps <= beta_kbps <= config.beta_max_kbps:
        raise BandwidthOutOfRange(
            f"{beta_kbps!r} kbps outside of [{config.beta_min_kbps:g}, {config.beta_max_kbps:g}] kbps"
        )
    above_base = beta_kbps - config.beta_min_kbps
    count = math.floor(above_base / granularity)
    residual = above_base - count * granularity
    # the quotient can round across a layer boundary
    if residual >= granularity:
        count, residual = count + 1, residual - granularity
    elif residual < 0:
        if count > 0:
            count, residual = count - 1, residual + granularity
        else:
            residual = 0.0
    return LayerPlan(
        base_kbps=config.beta_min_kbps,
        enhancement_count=count,
        enhancement_kbps=granularity,
        residual_kbps=residual
    )


def plan_allocation(alloc: Allocation, config: SystemConfig) -> List[LayerPlan]:
    """The layer plans of all sessions of an allocation, in rank order."""
    return [plan_layers(session.beta_kbps, config) for session in alloc.per_session]
