#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "chdrl/numerics.hpp"

namespace chdrl {

struct Transition {
    Vec s;
    Vec a; // env-scale action
    double r = 0.0;
    Vec s_next;
    // Environment termination only; horizon cut-offs are stored as false.
    bool done = false;

    bool operator==(const Transition& o) const
    {
        return r == o.r && done == o.done && s == o.s && a == o.a && s_next == o.s_next;
    }
};

/// Transitions of the episode in progress plus its running return.
class EpisodeBuffer {
public:
    void push(Transition t)
    {
        ret_ += t.r;
        steps_.push_back(std::move(t));
    }
    void clear()
    {
        steps_.clear();
        ret_ = 0.0;
    }
    const std::vector<Transition>& steps() const { return steps_; }
    double episode_return() const { return ret_; }
    std::size_t size() const { return steps_.size(); }
    bool empty() const { return steps_.empty(); }

private:
    std::vector<Transition> steps_;
    double ret_ = 0.0;
};

/// FIFO store of transitions. capacity 0 means unbounded; otherwise a push
/// into a full buffer overwrites the oldest entry.
class TransitionRing {
public:
    explicit TransitionRing(std::size_t capacity = 0) : capacity_(capacity)
    {
        if (capacity_ > 0)
            items_.reserve(capacity_);
    }

    void push(const Transition& t);

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool bounded() const { return capacity_ > 0; }
    bool empty() const { return items_.empty(); }
    std::uint64_t pushes() const { return pushes_; }
    /// i-th oldest transition currently stored.
    const Transition& at(std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

private:
    std::size_t capacity_;
    std::vector<Transition> items_;
    std::size_t head_ = 0; // index of the oldest entry once full
    std::uint64_t pushes_ = 0;
};

/// Expandable store of every admitted transition (optionally capped).
using GlobalMemory = TransitionRing;
/// Fixed-capacity FIFO store for fresh, admission-filtered episodes.
using LocalMemory = TransitionRing;

inline void push_fifo(LocalMemory& lm, const Transition& t) { lm.push(t); }

struct ReplayMemory {
    GlobalMemory global;
    LocalMemory local;

    ReplayMemory(std::size_t global_capacity, std::size_t local_capacity)
        : global(global_capacity), local(local_capacity)
    {
        if (local_capacity == 0)
            throw Error("local memory capacity must be positive");
    }
};

/// Position of an agent in the transfer hierarchy.
enum class Tier { Global, LocalUpper, LocalLower };

struct TransferFlags {
    bool accepted_upper = false; // A_p: the upper local agent took the global policy
    bool accepted_lower = false; // A_c: the lower local agent took the global policy

    bool for_tier(Tier tier) const
    {
        return tier == Tier::LocalUpper ? accepted_upper : tier == Tier::LocalLower ? accepted_lower : false;
    }
};

inline constexpr double kNoScore = -std::numeric_limits<double>::infinity();

/// Local admission predicate: R > R_m and (global agent or the agent's own flag).
bool admits_local(double episode_return, double min_score, Tier tier, const TransferFlags& flags);

struct AdmissionResult {
    bool stored_local = false;
};

/// Appends the episode to M_g, and to M_l when admits_local holds and
/// local_enabled is set. Clears the episode buffer.
AdmissionResult admit_episode(ReplayMemory& memory, EpisodeBuffer& episode, Tier tier, const TransferFlags& flags,
                              double min_score, bool local_enabled = true);

/// A batch in matrix form, one transition per column.
struct Batch {
    enum class Source { Global, Local };

    Mat s;
    Mat a;
    Vec r;
    Mat s_next;
    Vec done;
    Source source = Source::Global;

    Index size() const { return r.size(); }
};

Batch gather(const TransitionRing& buffer, const std::vector<std::size_t>& indices);

/// Uniform sample with replacement.
Batch sample_uniform(const TransitionRing& buffer, std::size_t batch_size, Rng& rng);

/// One Bernoulli(p) draw picks the source for the whole batch (local on 1).
/// An empty pick falls back to the other buffer; both empty throws.
Batch sample_mixed(const GlobalMemory& gm, const LocalMemory& lm, std::size_t batch_size, double p, Rng& rng);

} // namespace chdrl
