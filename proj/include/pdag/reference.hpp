#pragma once

#include "pdag/optimizer.hpp"

namespace pdag::reference {

/// Plain serial Partition-DAG coordinate descent. Every inner product is recomputed
/// from scratch, Case III choices compare the objective of the two affected rows
/// evaluated from scratch, and cycle checks search the current support of B directly.
/// Block rows run one after another. Coordinate order matches pdag::fit, so results
/// agree with it up to rounding. Used as a test oracle and benchmark baseline.
FitResult fit_serial(const SampleCovariance& s, const Partition& partition,
                     const FitOptions& options);

}  // namespace pdag::reference
