#pragma once

#include <iosfwd>
#include <string>

#include "tailmix/loss_sample.hpp"

namespace tailmix {

/// Reads losses (and optional group labels) from a delimited file with a
/// header row. Column lookup is by exact header name; parse failures raise
/// InputError carrying the 1-based line number. Loss values must be positive
/// finite numbers.
LossSample read_loss_csv(const std::string& path, const std::string& loss_column,
                         const std::string& group_column = "", char delimiter = ',');

LossSample read_loss_csv(std::istream& in, const std::string& loss_column,
                         const std::string& group_column = "", char delimiter = ',');

}  // namespace tailmix
