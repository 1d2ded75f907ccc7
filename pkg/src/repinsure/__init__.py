"""Analytics and simulation of a marketplace reputation system with new-seller insurance."""

from .baseline import (
    BaselineMeasures,
    baseline_measures,
    drop_out_probability,
    expected_ramp_up_time,
    long_term_profit,
)
from .errors import (
    AuditFailure,
    BoundViolationWarning,
    ConfigError,
    DivergenceError,
    DomainError,
    EvaluationError,
    HorizonError,
    ProtocolError,
    ReputationModelError,
)
from .insurance import (
    CertificateState,
    CertStatus,
    InsurancePolicy,
    InsuredMeasures,
    SettlementOutcome,
    clear_certificate,
    expire_and_clear,
    insured_drop_out_probability,
    insured_long_term_profit,
    insured_measures,
    insured_ramp_up_time,
    issue_certificate,
    max_insurance_price,
    min_clearing_time,
    min_deposit_threshold,
    settle_slot,
    settle_transaction,
)
from .market import (
    FunctionalAdoption,
    MarketParams,
    ReputationProfile,
    SlotFeedback,
    TabulatedAdoption,
    estimated_quality,
    feedback_rating,
    is_reputable,
    purchase_probabilities,
    transaction_fee,
    transaction_rate,
    unit_profit,
    update_profile,
)
from .numerics import (
    DiscountSpec,
    PoissonDist,
    discounted_slot_sum,
    erlang_pdf,
    integrate_1d,
    poisson_cdf,
    poisson_pmf,
    poisson_sf,
    uniform_ceil_discount_mean,
)
from .simulator import (
    EstimateWithCI,
    MonteCarloMeasures,
    SellerTrajectory,
    SimConfig,
    adversarial_protocol_audit,
    monte_carlo_measures,
    simulate_seller,
)

__version__ = "0.1.0"
