#pragma once

#include <span>

namespace modgrok::detail {

// Vectorized tanh, accurate to a few ulp: sign(x)·(1 − e)/(1 + e), e = exp(−2|x|).
void tanh_inplace(std::span<double> values);

}  // namespace modgrok::detail
