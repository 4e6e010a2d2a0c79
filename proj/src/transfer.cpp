#include "chdrl/transfer.hpp"

#include <algorithm>

namespace chdrl {

double AgentScore::minimum() const
{
    std::optional<double> m;
    for (const auto& s : {global, local_upper, local_lower})
        if (s)
            m = m ? std::min(*m, *s) : *s;
    return m.value_or(kNoScore);
}

Tier source_tier(TransferEdge edge) { return edge == TransferEdge::UpperToLower ? Tier::LocalUpper : Tier::Global; }

Tier target_tier(TransferEdge edge) { return edge == TransferEdge::GlobalToUpper ? Tier::LocalUpper : Tier::LocalLower; }

std::string edge_name(TransferEdge edge)
{
    switch (edge) {
    case TransferEdge::GlobalToUpper:
        return "global>upper";
    case TransferEdge::GlobalToLower:
        return "global>lower";
    case TransferEdge::UpperToLower:
        return "upper>lower";
    }
    return "?";
}

std::vector<TransferEvent> decide_transfers(const AgentScore& scores, double gap)
{
    std::vector<TransferEvent> out;
    for (TransferEdge edge : {TransferEdge::GlobalToUpper, TransferEdge::GlobalToLower, TransferEdge::UpperToLower}) {
        const auto src = scores.of(source_tier(edge));
        const auto dst = scores.of(target_tier(edge));
        if (!src || !dst)
            continue;
        const double diff = *src - *dst;
        if (diff > gap)
            out.push_back({edge, diff});
    }
    return out;
}

void mark_flags(TransferFlags& flags, const std::vector<TransferEvent>& events)
{
    for (const TransferEvent& e : events) {
        if (e.edge == TransferEdge::GlobalToUpper)
            flags.accepted_upper = true;
        else if (e.edge == TransferEdge::GlobalToLower)
            flags.accepted_lower = true;
    }
}

} // namespace chdrl
