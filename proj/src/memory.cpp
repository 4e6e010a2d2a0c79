#include "chdrl/memory.hpp"

namespace chdrl {

void TransitionRing::push(const Transition& t)
{
    ++pushes_;
    if (capacity_ == 0 || items_.size() < capacity_) {
        items_.push_back(t);
        return;
    }
    items_[head_] = t;
    head_ = (head_ + 1) % capacity_;
}

bool admits_local(double episode_return, double min_score, Tier tier, const TransferFlags& flags)
{
    return episode_return > min_score && (tier == Tier::Global || flags.for_tier(tier));
}

AdmissionResult admit_episode(ReplayMemory& memory, EpisodeBuffer& episode, Tier tier, const TransferFlags& flags,
                              double min_score, bool local_enabled)
{
    AdmissionResult result;
    result.stored_local = local_enabled && admits_local(episode.episode_return(), min_score, tier, flags);
    for (const Transition& t : episode.steps()) {
        memory.global.push(t);
        if (result.stored_local)
            push_fifo(memory.local, t);
    }
    episode.clear();
    return result;
}

Batch gather(const TransitionRing& buffer, const std::vector<std::size_t>& indices)
{
    if (indices.empty())
        throw Error("cannot gather an empty batch");
    const Transition& first = buffer.at(indices.front());
    const auto n = static_cast<Index>(indices.size());
    Batch b;
    b.s.resize(first.s.size(), n);
    b.a.resize(first.a.size(), n);
    b.s_next.resize(first.s_next.size(), n);
    b.r.resize(n);
    b.done.resize(n);
    for (Index j = 0; j < n; ++j) {
        const Transition& t = buffer.at(indices[static_cast<std::size_t>(j)]);
        b.s.col(j) = t.s;
        b.a.col(j) = t.a;
        b.s_next.col(j) = t.s_next;
        b.r[j] = t.r;
        b.done[j] = t.done ? 1.0 : 0.0;
    }
    return b;
}

Batch sample_uniform(const TransitionRing& buffer, std::size_t batch_size, Rng& rng)
{
    if (buffer.empty())
        throw Error("cannot sample from an empty memory");
    if (batch_size == 0)
        throw Error("batch size must be positive");
    std::vector<std::size_t> idx(batch_size);
    for (auto& i : idx)
        i = draw_index(rng, buffer.size());
    return gather(buffer, idx);
}

Batch sample_mixed(const GlobalMemory& gm, const LocalMemory& lm, std::size_t batch_size, double p, Rng& rng)
{
    if (gm.empty() && lm.empty())
        throw Error("both memories are empty");
    bool local = draw_bernoulli(rng, p);
    if (local && lm.empty())
        local = false;
    else if (!local && gm.empty())
        local = true;
    Batch b = sample_uniform(local ? lm : gm, batch_size, rng);
    b.source = local ? Batch::Source::Local : Batch::Source::Global;
    return b;
}

} // namespace chdrl
