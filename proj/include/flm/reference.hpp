#pragma once

#include "flm/ocp.hpp"
#include "flm/pde.hpp"

namespace flm::reference {

/// Straightforward serial penalty loss built on eval_bundle and explicit
/// parameter-gradient vectors. Kept as an independently-coded check (and
/// benchmark baseline) for the fused kernel in penalty_loss.
PenaltyLoss penalty_loss(const OcpNets& nets, const std::vector<Vec3>& u0_batch,
                         const OcpConfig& cfg);

} // namespace flm::reference
