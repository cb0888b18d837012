"""Techno-economics and simulation-backed sizing.

Money is held in integer cents internally; public functions return USD.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .dispatch import LoadItem, LoadKind
from .engine import SystemConfig, run
from .errors import ValidationError

SCALES = (None, "panel", "battery")


def usd_to_cents(usd: float) -> int:
    return int(round(float(usd) * 100))


def cents_to_usd(cents: int) -> float:
    return cents / 100.0


@dataclass(frozen=True)
class CatalogItem:
    name: str
    unit_price_cents: int
    quantity: int = 1
    lifetime_years: tuple | None = None
    scales: str | None = None

    def __post_init__(self):
        if self.unit_price_cents < 0 or self.quantity < 0:
            raise ValidationError(f"item {self.name!r}: price and quantity must be non-negative")
        if self.scales not in SCALES:
            raise ValidationError(f"item {self.name!r}: scales must be panel, battery or none")

    @classmethod
    def usd(cls, name, unit_price_usd, quantity=1, lifetime_years=None, scales=None):
        return cls(name, usd_to_cents(unit_price_usd), quantity, lifetime_years, scales)

    @property
    def amount_cents(self) -> int:
        return self.unit_price_cents * self.quantity


@dataclass(frozen=True)
class CostCatalog:
    items: tuple = ()
    shipping_cents: int = 0
    free_years: int = 3
    annual_fee_cents: int = 2000
    replace_battery_year: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if self.shipping_cents < 0 or self.annual_fee_cents < 0 or self.free_years < 0:
            raise ValidationError("shipping, fee and free_years must be non-negative")

    @property
    def components_cents(self) -> int:
        return sum(item.amount_cents for item in self.items)

    def scaled(self, n_panels: int, n_batteries: int) -> "CostCatalog":
        """Catalog with panel- and battery-scaled quantities replaced."""
        items = []
        for item in self.items:
            if item.scales == "panel":
                item = replace(item, quantity=n_panels)
            elif item.scales == "battery":
                item = replace(item, quantity=n_batteries)
            items.append(item)
        return replace(self, items=tuple(items))


def basic_catalog(annual_fee_usd: float = 20.0, replace_battery_year: int | None = None) -> CostCatalog:
    """Bill of materials of the two-panel, two-battery Basic version."""
    return CostCatalog(
        items=(
            CatalogItem.usd("Solar Panel", 90, 2, (5, 10), "panel"),
            CatalogItem.usd("Power Management IC", 0.8, 25, (5, 10)),
            CatalogItem.usd("Lead-acid (VRLA) Battery", 10, 2, (3, 5), "battery"),
            CatalogItem.usd("Peripheral equipment", 10, 1, (3, 5)),
        ),
        shipping_cents=usd_to_cents(10),
        free_years=3,
        annual_fee_cents=usd_to_cents(annual_fee_usd),
        replace_battery_year=replace_battery_year,
    )


def bill_of_materials_cents(catalog: CostCatalog) -> int:
    first_period = catalog.annual_fee_cents if catalog.free_years == 0 else 0
    return catalog.components_cents + catalog.shipping_cents + first_period


def bill_of_materials(catalog: CostCatalog) -> float:
    return cents_to_usd(bill_of_materials_cents(catalog))


def _battery_replacement_cents(catalog: CostCatalog, years: int) -> int:
    year = catalog.replace_battery_year
    if year is None or years < year:
        return 0
    return sum(i.amount_cents for i in catalog.items if i.scales == "battery")


def tco_cents(catalog: CostCatalog, years: int) -> int:
    if years < 1:
        raise ValidationError(f"years must be >= 1, got {years!r}")
    fees = catalog.annual_fee_cents * max(0, years - catalog.free_years)
    return (catalog.components_cents + catalog.shipping_cents + fees
            + _battery_replacement_cents(catalog, years))


def tco(catalog: CostCatalog, years: int) -> float:
    """Purchase plus maintenance fees after the free period, in USD."""
    return cents_to_usd(tco_cents(catalog, years))


def cost_per_kwh(tco_usd: float, daily_kwh: float, years: float) -> float:
    if daily_kwh <= 0 or years <= 0:
        raise ValidationError("daily_kwh and years must be positive")
    return tco_usd / (daily_kwh * 365.0 * years)


def system_cost_cents(catalog: CostCatalog, n_panels: int, n_batteries: int) -> int:
    """Up-front cost of a sized system; nothing is bought for an empty one."""
    if n_panels == 0 and n_batteries == 0:
        return 0
    return bill_of_materials_cents(catalog.scaled(n_panels, n_batteries))


# --- P&L ------------------------------------------------------------------

@dataclass(frozen=True)
class PnlScenario:
    unit_price_usd: float = 240.0
    units_sold_per_year: tuple = (500, 500, 500)
    unit_cogs_usd: float = 120.0
    fixed_opex_usd_per_year: float = 20000.0
    initial_capital_usd: float = 100000.0

    def __post_init__(self):
        object.__setattr__(self, "units_sold_per_year", tuple(self.units_sold_per_year))
        values = (self.unit_price_usd, self.unit_cogs_usd, self.fixed_opex_usd_per_year,
                  self.initial_capital_usd, *self.units_sold_per_year)
        if any(v < 0 for v in values):
            raise ValidationError("P&L inputs must be non-negative")
        if not self.units_sold_per_year:
            raise ValidationError("units_sold_per_year must list at least one year")


@dataclass(frozen=True)
class PnlProjection:
    years: tuple
    break_even_year: int | None

    def to_dict(self):
        return {"years": [dict(y) for y in self.years], "break_even_year": self.break_even_year}


def pnl_projection(s: PnlScenario, years: int) -> PnlProjection:
    """Undiscounted yearly P&L.  Years past the sales list repeat its last entry."""
    if years < 1:
        raise ValidationError(f"years must be >= 1, got {years!r}")
    price = usd_to_cents(s.unit_price_usd)
    cogs = usd_to_cents(s.unit_cogs_usd)
    opex = usd_to_cents(s.fixed_opex_usd_per_year)
    cumulative = -usd_to_cents(s.initial_capital_usd)
    rows = []
    break_even = None
    for y in range(1, years + 1):
        units = s.units_sold_per_year[min(y, len(s.units_sold_per_year)) - 1]
        revenue = price * units
        costs = cogs * units + opex
        cumulative += revenue - costs
        rows.append({
            "year": y,
            "units": units,
            "revenue_usd": cents_to_usd(revenue),
            "costs_usd": cents_to_usd(costs),
            "profit_usd": cents_to_usd(revenue - costs),
            "cumulative_usd": cents_to_usd(cumulative),
        })
        if break_even is None and cumulative >= 0:
            break_even = y
    return PnlProjection(tuple(rows), break_even)


# --- Sizing ---------------------------------------------------------------

@dataclass(frozen=True)
class SizingResult:
    n_panels: int
    n_batteries: int
    total_cost_usd: float
    feasible: bool
    unmet_wh: float
    end_soc_delta: float

    def to_dict(self):
        return {
            "n_panels": self.n_panels,
            "n_batteries": self.n_batteries,
            "feasible": self.feasible,
            "total_cost_usd": self.total_cost_usd,
            "unmet_wh": self.unmet_wh,
            "end_soc_delta": self.end_soc_delta,
        }


def evaluate_composition(base_config: SystemConfig, profile, catalog: CostCatalog,
                         n_panels: int, n_batteries: int) -> SizingResult:
    """Simulate one (panels, batteries) pair and classify it.

    Feasible means no load energy was shed and the bank ends the day at
    least as full as it started.
    """
    result = run(base_config.with_counts(n_panels, n_batteries), profile)
    unmet = result.totals["shed_wh"]
    delta = result.end_soc - result.start_soc
    return SizingResult(
        n_panels=n_panels,
        n_batteries=n_batteries,
        total_cost_usd=cents_to_usd(system_cost_cents(catalog, n_panels, n_batteries)),
        feasible=unmet == 0.0 and delta >= 0.0,
        unmet_wh=unmet,
        end_soc_delta=delta,
    )


def sizing_key(r: SizingResult):
    """Total order used to pick the answer: feasible first, then cost, then size."""
    if r.feasible:
        return (0, 0.0, r.total_cost_usd, r.n_panels, r.n_batteries)
    return (1, r.unmet_wh, r.total_cost_usd, r.n_panels, r.n_batteries)


def _evaluate_cell(args):
    return evaluate_composition(*args)


def size_system(base_config: SystemConfig, profile, catalog: CostCatalog,
                n_panels_max: int, n_batteries_max: int, workers: int | None = None) -> SizingResult:
    """Exhaustive search over ``[0..n_panels_max] x [0..n_batteries_max]``.

    Returns the cheapest feasible pair (ties to fewer panels, then fewer
    batteries) or, if none is feasible, the pair with the least unmet
    energy, flagged infeasible.
    """
    if n_panels_max < 1 or n_batteries_max < 1:
        raise ValidationError("sizing bounds must be >= 1")
    base_config.validate()
    cells = [(base_config, profile, catalog, p, b)
             for p in range(n_panels_max + 1) for b in range(n_batteries_max + 1)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_cell, cells))
    else:
        results = [_evaluate_cell(c) for c in cells]
    return min(results, key=sizing_key)


def tier2_loads() -> tuple:
    """Reference Tier-2 household: daytime appliances plus evening lighting and TV.

    About 1 kWh/day at the appliances; roughly 40% falls after sunset.
    """
    return (
        LoadItem("lights", LoadKind.DC, 40.0, 9, ((18, 23),)),
        LoadItem("phone", LoadKind.DC, 10.0, 8, ((18, 22),)),
        LoadItem("tv", LoadKind.AC, 60.0, 6, ((19, 22),)),
        LoadItem("fan", LoadKind.AC, 50.0, 4, ((10, 16),)),
        LoadItem("appliances", LoadKind.AC, 50.0, 3, ((11, 16),)),
    )


def daily_load_wh(loads) -> float:
    total = 0.0
    for load in loads:
        if not load.hours:
            total += load.p_w * 24.0
            continue
        for start, end in load.hours:
            span = end - start if start <= end else 24.0 - start + end
            total += load.p_w * span
    return total


def planning_report(catalog: CostCatalog, pnl: PnlScenario, years: int, daily_kwh: float,
                    sizing: SizingResult | None = None, pnl_years: int | None = None) -> dict:
    tco_usd = tco(catalog, years)
    report = {
        "bom_usd": bill_of_materials(catalog),
        "tco_usd": tco_usd,
        "years": years,
        "daily_kwh": daily_kwh,
        "cost_per_kwh": cost_per_kwh(tco_usd, daily_kwh, years),
    }
    if sizing is not None:
        report["sizing"] = sizing.to_dict()
    report["pnl"] = pnl_projection(pnl, pnl_years or max(years, len(pnl.units_sold_per_year))).to_dict()
    return report
