#pragma once

#include <string>

#include "hamrec/train.hpp"

namespace hamrec {

// Binary snapshot of the full optimizer state (parameters, best-so-far
// parameters, Adam moments, beta, epoch counters, RNG state) so runs can
// resume exactly. Written atomically: an interrupted save never clobbers
// the previous checkpoint.
void save_checkpoint(const std::string& path, const TrainState& state);
TrainState load_checkpoint(const std::string& path);

}  // namespace hamrec
