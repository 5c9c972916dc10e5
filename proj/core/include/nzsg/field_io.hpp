#pragma once

#include <iosfwd>
#include <string>

#include "nzsg/field.hpp"

namespace nzsg {

/// Header of the field dump for a given dimension:
/// s,x1[,x2],V1,V2,dV1_dx1[,dV1_dx2],dV2_dx1[,dV2_dx2]
std::string field_csv_header(int dim);

/// One row per (level, node), level-major, nodes row-major; shortest
/// round-trip number formatting.
void write_field_csv(std::ostream& out, const ValueField& field);

/// Reads a dump written by write_field_csv. The grid is inferred from the
/// rows; gradients are recomputed from the values. Throws ParseError with the
/// byte offset of the offending field.
ValueField read_field_csv(std::istream& in);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace nzsg
