#pragma once

// Cell-list event queue for many-particle flows on unbounded R^d. Included
// from flow.hpp; not meant to be used on its own.

#include <algorithm>
#include <array>
#include <compare>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <unordered_map>
#include <vector>

#include "hslab/core/collision.hpp"
#include "hslab/core/configuration.hpp"
#include "hslab/core/errors.hpp"

namespace hslab::detail {

struct CellKey {
  std::array<std::int64_t, 3> k{0, 0, 0};
  friend bool operator==(const CellKey&, const CellKey&) = default;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& c) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto v : c.k) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

class CellEventEngine {
 public:
  CellEventEngine(Configuration z, const FlowOptions& opt)
      : z_(std::move(z)), opt_(opt), dim_(z_.dim) {
    cell_ = opt.cell_size > 0.0 ? std::max(opt.cell_size, z_.diameter) : 2.0 * z_.diameter;
    const std::size_t n = z_.count();
    tref_.assign(n, 0.0);
    count_.assign(n, 0);
    key_.resize(n);
    slot_.resize(n);
    for (std::size_t i = 0; i < n; ++i) insert(i, key_of(z_.x[i]));
  }

  FlowResult run(double duration) {
    FlowResult res;
    for (std::size_t i = 0; i < z_.count(); ++i) schedule(i, 0.0);
    std::vector<Event> batch;
    while (!queue_.empty()) {
      Event ev = queue_.top();
      if (!(ev.t < duration)) break;
      queue_.pop();
      if (!valid(ev)) continue;
      if (ev.kind == Kind::graze) throw DegenerateConfiguration("grazing contact along the trajectory");
      if (ev.kind == Kind::cell) {
        cross_cell(ev);
        continue;
      }
      // gather every valid collision within the tie window
      batch.clear();
      batch.push_back(ev);
      while (!queue_.empty() && queue_.top().t <= ev.t + opt_.tol.tie) {
        Event nx = queue_.top();
        queue_.pop();
        if (!valid(nx)) continue;
        if (nx.kind == Kind::graze)
          throw DegenerateConfiguration("grazing contact along the trajectory");
        if (nx.kind == Kind::cell) {
          cross_cell(nx);
          continue;
        }
        batch.push_back(nx);
      }
      std::sort(batch.begin(), batch.end(), [](const Event& a, const Event& b) {
        return std::pair(a.i, a.j) < std::pair(b.i, b.j);
      });
      // a pair is queued once from each side
      batch.erase(std::unique(batch.begin(), batch.end(),
                              [](const Event& a, const Event& b) { return a.i == b.i && a.j == b.j; }),
                  batch.end());
      for (std::size_t a = 0; a < batch.size(); ++a)
        for (std::size_t b = a + 1; b < batch.size(); ++b)
          if (batch[a].i == batch[b].i || batch[a].i == batch[b].j ||
              batch[a].j == batch[b].i || batch[a].j == batch[b].j)
            throw DegenerateConfiguration("simultaneous contacts share a particle");
      for (const auto& c : batch) {
        advance(c.i, c.t);
        advance(c.j, c.t);
      }
      if (opt_.snapshots) {
        Configuration snap = snapshot(ev.t);
        for (std::size_t a = 0; a < batch.size(); ++a) res.snapshots.push_back(snap);
      }
      for (const auto& c : batch) {
        Vec omega = z_.x[c.j] - z_.x[c.i];
        omega *= 1.0 / norm(omega);
        CollisionEvent rec;
        rec.time = ev.t;
        rec.i = c.i;
        rec.j = c.j;
        rec.omega = omega;
        rec.pre = {z_.v[c.i], z_.v[c.j]};
        const double k = dot(omega, z_.v[c.j] - z_.v[c.i]);
        z_.v[c.i] += omega * k;
        z_.v[c.j] -= omega * k;
        rec.post = {z_.v[c.i], z_.v[c.j]};
        res.events.push_back(rec);
        ++count_[c.i];
        ++count_[c.j];
      }
      if (res.events.size() > opt_.tol.max_events)
        throw RunawayDynamics("collision budget exceeded");
      for (const auto& c : batch) {
        schedule(c.i, ev.t);
        schedule(c.j, ev.t);
      }
    }
    for (std::size_t i = 0; i < z_.count(); ++i) advance(i, duration);
    res.final = std::move(z_);
    res.elapsed = duration;
    return res;
  }

 private:
  enum class Kind : std::uint8_t { collision, graze, cell };
  struct Event {
    double t;
    Kind kind;
    std::size_t i, j;
    std::uint64_t ci, cj;
    bool operator>(const Event& o) const {
      if (t != o.t) return t > o.t;
      return std::pair(i, j) > std::pair(o.i, o.j);
    }
  };

  CellKey key_of(const Vec& x) const {
    CellKey c;
    for (int k = 0; k < dim_; ++k)
      c.k[static_cast<std::size_t>(k)] =
          static_cast<std::int64_t>(std::floor(x[static_cast<std::size_t>(k)] / cell_));
    return c;
  }

  void insert(std::size_t i, const CellKey& key) {
    auto& members = cells_[key];
    key_[i] = key;
    slot_[i] = members.size();
    members.push_back(i);
  }

  void erase(std::size_t i) {
    auto it = cells_.find(key_[i]);
    auto& members = it->second;
    const std::size_t last = members.back();
    members[slot_[i]] = last;
    slot_[last] = slot_[i];
    members.pop_back();
    if (members.empty()) cells_.erase(it);
  }

  void advance(std::size_t i, double t) {
    z_.x[i] += z_.v[i] * (t - tref_[i]);
    tref_[i] = t;
  }

  Vec position_at(std::size_t i, double t) const { return z_.x[i] + z_.v[i] * (t - tref_[i]); }

  Configuration snapshot(double t) const {
    Configuration snap(z_.dim, z_.diameter);
    for (std::size_t i = 0; i < z_.count(); ++i) snap.push_back(position_at(i, t), z_.v[i]);
    return snap;
  }

  bool valid(const Event& e) const {
    if (count_[e.i] != e.ci) return false;
    if (e.kind != Kind::cell && count_[e.j] != e.cj) return false;
    return true;
  }

  void schedule(std::size_t i, double now) {
    advance(i, now);
    const Vec xi = z_.x[i];
    const CellKey& base = key_[i];
    const int reach = dim_ == 3 ? 1 : 0;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -reach; c <= reach; ++c) {
          CellKey nk = base;
          nk.k[0] += a;
          nk.k[1] += b;
          nk.k[2] += c;
          auto it = cells_.find(nk);
          if (it == cells_.end()) continue;
          for (std::size_t j : it->second) {
            if (j == i) continue;
            const Vec xj = position_at(j, now);
            const auto q = impact_query(xi, z_.v[i], xj, z_.v[j], z_.diameter, opt_.tol);
            if (q.kind == ImpactKind::contact)
              throw DegenerateConfiguration("pair sits on a pre-collisional contact");
            if (q.kind == ImpactKind::none) continue;
            const std::size_t lo = std::min(i, j), hi = std::max(i, j);
            queue_.push({now + q.time, q.kind == ImpactKind::hit ? Kind::collision : Kind::graze,
                         lo, hi, count_[lo], count_[hi]});
          }
        }
    // next cell-boundary crossing
    double tc = INFINITY;
    for (int k = 0; k < dim_; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const double vk = z_.v[i][kk];
      if (vk > 0.0)
        tc = std::min(tc, ((static_cast<double>(base.k[kk]) + 1.0) * cell_ - xi[kk]) / vk);
      else if (vk < 0.0)
        tc = std::min(tc, (static_cast<double>(base.k[kk]) * cell_ - xi[kk]) / vk);
    }
    if (std::isfinite(tc))
      queue_.push({now + std::max(tc, 0.0), Kind::cell, i, i, count_[i], count_[i]});
  }

  void cross_cell(const Event& e) {
    const std::size_t i = e.i;
    advance(i, e.t);
    // step just past the boundary along the velocity
    CellKey nk = key_[i];
    double tmin = INFINITY;
    int axis = -1;
    for (int k = 0; k < dim_; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const double vk = z_.v[i][kk];
      double tk = INFINITY;
      if (vk > 0.0) tk = ((static_cast<double>(nk.k[kk]) + 1.0) * cell_ - z_.x[i][kk]) / vk;
      if (vk < 0.0) tk = (static_cast<double>(nk.k[kk]) * cell_ - z_.x[i][kk]) / vk;
      if (tk < tmin) {
        tmin = tk;
        axis = k;
      }
    }
    if (axis >= 0) nk.k[static_cast<std::size_t>(axis)] += z_.v[i][static_cast<std::size_t>(axis)] > 0 ? 1 : -1;
    erase(i);
    insert(i, nk);
    ++count_[i];
    schedule(i, e.t);
  }

  Configuration z_;
  FlowOptions opt_;
  int dim_;
  double cell_ = 1.0;
  std::vector<double> tref_;
  std::vector<std::uint64_t> count_;
  std::vector<CellKey> key_;
  std::vector<std::size_t> slot_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> cells_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
};

inline FlowResult flow_forward_cells(Configuration z, double duration, const FlowOptions& opt) {
  CellEventEngine engine(std::move(z), opt);
  return engine.run(duration);
}

}  // namespace hslab::detail
