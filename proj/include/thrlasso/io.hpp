#pragma once

#include "thrlasso/design.hpp"

#include <iosfwd>
#include <string>

namespace thrlasso {

/**
 * CSV layout: header row, then y, q, covariates. Comma separated, '.' decimal
 * point, optional UTF-8 BOM and CRLF line ends. Empty or NA cells are errors.
 * Throws ParseError (line and column in the message) or the Dataset errors.
 */
Dataset parse_csv(std::istream& in, TiePolicy ties = TiePolicy::Reject);
Dataset load_csv(const std::string& path, TiePolicy ties = TiePolicy::Reject);

/// Writes every value with %.17g so load_csv reproduces it bit for bit.
void write_csv(std::ostream& out, const Dataset& data);
void write_dataset(const std::string& path, const Dataset& data);

/// %.17g
std::string format_double(double v);

}  // namespace thrlasso
