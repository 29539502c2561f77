"""impactlab: latent order books, market impact and execution costs.

A numerical laboratory for the competitive market-making picture of market
impact: build the latent book a zero-profit maker supplies against
power-law meta-order flow, simulate the resulting diffusive price process,
model post-completion decay, estimate renormalized and aggregate impact by
Monte Carlo, and price execution strategies.
"""

from .book import (LatentBook, OracleReport, calibrate_scale, impact_at,
                   impact_curve_slope, latent_volume_profile, permanent_impact,
                   power_law_book, reversion_at, solve_alpha_powerlaw,
                   solve_book_general, transient_impact, verify_book_small,
                   volume_profile_slope)
from .decay import (DecayCurve, DecayParams, decay_curve, decay_losses,
                    decay_ratio, full_decay_lambda, geometric_survival,
                    minimize_decay_loss)
from .errors import (BracketError, DivergentMomentError, ParameterError,
                     VolumeRangeError)
from .execution import (AsymmetryPremium, FastTradeAnalytics, StrategySchedule,
                        VwapCostReport, asymmetry_premium, bucket_strategy,
                        f_delta, gain_analytics, trivial_strategy_bounds,
                        vwap_cost_mc)
from .impact import (CutoffCurve, ImpactCurve, ImpactPoint, RenormConfig,
                     aggregate_impact_mc, renormalized_asymptote,
                     renormalized_curve, renormalized_impact_mc,
                     single_trade_cutoff_curve, single_trend_impact_mc)
from .numerics import LogLogFit, fit_loglog_slope, solve_root
from .simulate import (EventLog, OrderLog, PnlBucket, SignaturePoint, SimConfig,
                       SimResult, decision_increments, mm_pnl_by_size,
                       run_simulation, sign_autocorrelation, variance_growth,
                       volatility_signature)
from .sizes import RandomSource, TailDistribution

__version__ = "0.1.0"
