#pragma once

#include <iosfwd>

#include "xlstance/model.hpp"

namespace xlstance {

// Stream-level store serialization shared by the bare-store and the
// full-model checkpoint writers.
void save_store(std::ostream& out, const ParameterStore& store);
ParameterStore load_store(std::istream& in);

}  // namespace xlstance
