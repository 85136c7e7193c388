#pragma once

#include "ednaplus/random.hpp"

namespace ednaplus {

// Draw from the Polya-Gamma PG(b, c) law; b is a positive integer and the
// draw is the sum of b independent PG(1, c) variates.
double polya_gamma_sample(Rng& rng, int b, double c);

// E[PG(1, c)] = tanh(c/2) / (2c), with the c -> 0 limit 1/4.
double polya_gamma_mean(double c);

}  // namespace ednaplus
