from ._uplrt import (  # noqa: F401
    __version__,
    adjusted_pvalue,
    chibar_tail,
    fit_mle,
    generate_pairs,
    log_likelihood,
    r_quantile,
    raw_pvalue,
    rstar_cdf,
    rstar_quantile,
    run_tests,
)
