#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chdrl/memory.hpp"

namespace chdrl {

/// Evaluation scores per hierarchy tier; absent tiers have no agent.
struct AgentScore {
    std::optional<double> global;      // S_s
    std::optional<double> local_upper; // S_p
    std::optional<double> local_lower; // S_c

    std::optional<double> of(Tier tier) const
    {
        return tier == Tier::Global ? global : tier == Tier::LocalUpper ? local_upper : local_lower;
    }
    /// min over present tiers, kNoScore before any evaluation.
    double minimum() const;
};

/// Copy edges of the hierarchy, checked in this order.
enum class TransferEdge {
    GlobalToUpper, // phi_p <- phi_s, psi_p <- psi_s, A_p
    GlobalToLower, // phi_c0 <- phi_s, A_c
    UpperToLower,  // phi_c1 <- phi_p
};

Tier source_tier(TransferEdge edge);
Tier target_tier(TransferEdge edge);
std::string edge_name(TransferEdge edge);

struct TransferEvent {
    TransferEdge edge;
    double gap = 0.0;
};

/// Gap rule: an edge fires iff both tiers are scored and S_src - S_dst > gap.
/// Edges are evaluated independently on the same scores.
std::vector<TransferEvent> decide_transfers(const AgentScore& scores, double gap);

/// Flag bookkeeping for fired edges: edges out of the global tier mark the
/// receiving tier as having accepted the global policy.
void mark_flags(TransferFlags& flags, const std::vector<TransferEvent>& events);

} // namespace chdrl
