#pragma once

#include "skewprune/tensor.hpp"

#include <vector>

namespace skewprune {

// Validated keep-index helpers for structural surgery. All indices must be
// sorted, unique, and within range of the sliced axis.
void check_keep(const std::vector<int>& keep, int axis_size, const char* what);

Tensor take_axis0(const Tensor& t, const std::vector<int>& keep);        // rows / filters / 1D entries
Tensor take_axis1(const Tensor& t, const std::vector<int>& keep);        // conv in-channels, linear columns
// Linear columns grouped per channel: column index = c*group + g.
Tensor take_cols_grouped(const Tensor& w, const std::vector<int>& keep_channels, int group);

}  // namespace skewprune
