#ifndef TASKQUANT_CHECKPOINT_HPP
#define TASKQUANT_CHECKPOINT_HPP

#include <iosfwd>
#include <string>

#include "taskquant/hybrid.hpp"

namespace taskquant {

// Flat text checkpoint: versioned header, layer shapes, row-major parameter
// values in decimal (17 significant digits, exact round-trip), quantizer
// parameters last.
void save_checkpoint(const HybridNetwork& net, std::ostream& out);
void save_checkpoint(const HybridNetwork& net, const std::string& path);

HybridNetwork load_checkpoint(std::istream& in);
HybridNetwork load_checkpoint(const std::string& path);

}  // namespace taskquant

#endif
