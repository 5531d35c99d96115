#include "lms/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "lms/error.hpp"
#include "lms/inputwaves.hpp"

namespace lms {

namespace {

long long probe_key(Pixel p) { return (static_cast<long long>(p.y) << 32) | static_cast<unsigned>(p.x); }

bool scanline_less(Pixel a, Pixel b) { return a.y != b.y ? a.y < b.y : a.x < b.x; }

/// Union of input index sets with O(|added|) insertion and size queries.
class InputUnion {
 public:
  explicit InputUnion(std::size_t n) : mark_(n, 0) {}

  std::size_t size() const { return members_.size(); }
  std::size_t size_with(const std::vector<int>& in) const {
    std::size_t extra = 0;
    for (int i : in) extra += mark_[static_cast<std::size_t>(i)] ? 0 : 1;
    return members_.size() + extra;
  }
  void add(const std::vector<int>& in) {
    for (int i : in) {
      auto& m = mark_[static_cast<std::size_t>(i)];
      if (!m) {
        m = 1;
        members_.push_back(i);
      }
    }
  }
  void clear() {
    for (int i : members_) mark_[static_cast<std::size_t>(i)] = 0;
    members_.clear();
  }

 private:
  std::vector<unsigned char> mark_;
  std::vector<int> members_;
};

void check_pixels(const std::vector<Pixel>& pixels, const LatticePair& lat) {
  std::set<Pixel> seen;
  for (const Pixel p : pixels) {
    if (p.x < 0 || p.x >= lat.probe_nx || p.y < 0 || p.y >= lat.probe_ny)
      throw InvalidArgument("pixel (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                            ") is outside the probe lattice");
    if (!seen.insert(p).second) throw InvalidArgument("duplicate pixel in request");
  }
}

std::vector<std::vector<Pixel>> row_by_row(std::vector<Pixel> pixels, const NeighborTable& table, std::size_t M) {
  std::sort(pixels.begin(), pixels.end(), scanline_less);
  InputUnion u(table.lattice().sub_count());
  std::vector<std::vector<Pixel>> sets;
  std::vector<Pixel> cur;
  for (const Pixel p : pixels) {
    const auto& in = table.inputs(p);
    if (!cur.empty() && u.size_with(in) > M) {
      sets.push_back(std::move(cur));
      cur.clear();
      u.clear();
    }
    u.add(in);
    cur.push_back(p);
  }
  if (!cur.empty()) sets.push_back(std::move(cur));
  return sets;
}

std::vector<std::vector<Pixel>> rectangles(const std::vector<Pixel>& pixels, const NeighborTable& table,
                                           std::size_t M) {
  int x0 = std::numeric_limits<int>::max(), y0 = x0, x1 = -1, y1 = -1;
  for (const Pixel p : pixels) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  const int W = x1 - x0 + 1;
  const int H = y1 - y0 + 1;
  std::set<Pixel> requested(pixels.begin(), pixels.end());

  InputUnion u(table.lattice().sub_count());
  int best_w = 1, best_h = 1;
  long long best_area = 0;
  for (int w = 1; w <= W; ++w) {
    u.clear();
    int h = 0;
    for (; h < H; ++h) {
      std::size_t after = 0;
      InputUnion trial = u;
      for (int a = 0; a < w; ++a) {
        const Pixel p{x0 + a, y0 + h};
        if (requested.count(p)) trial.add(table.inputs(p));
      }
      after = trial.size();
      if (after > M) break;
      u = std::move(trial);
    }
    if (h == 0) break;  // wider tiles only need more inputs
    if (static_cast<long long>(w) * h > best_area) {
      best_area = static_cast<long long>(w) * h;
      best_w = w;
      best_h = h;
    }
  }

  std::vector<std::vector<Pixel>> sets;
  for (int ty = y0; ty <= y1; ty += best_h) {
    for (int tx = x0; tx <= x1; tx += best_w) {
      std::vector<Pixel> tile;
      for (int y = ty; y < std::min(ty + best_h, y1 + 1); ++y)
        for (int x = tx; x < std::min(tx + best_w, x1 + 1); ++x)
          if (requested.count({x, y})) tile.push_back({x, y});
      if (tile.empty()) continue;
      if (needed_input_count(tile, table) <= M) {
        sets.push_back(std::move(tile));
      } else {
        for (auto& s : row_by_row(std::move(tile), table, M)) sets.push_back(std::move(s));
      }
    }
  }
  return sets;
}

std::vector<std::vector<Pixel>> greedy(const std::vector<Pixel>& pixels, const NeighborTable& table, std::size_t M,
                                       Pixel seed) {
  std::set<Pixel> unassigned(pixels.begin(), pixels.end());
  auto nearest_unassigned = [&](Pixel from) {
    Pixel best{};
    long long best_d = std::numeric_limits<long long>::max();
    for (const Pixel p : unassigned) {  // std::set iterates in (x, y) order; ties resolved below
      const long long dx = p.x - from.x, dy = p.y - from.y;
      const long long d = dx * dx + dy * dy;
      if (d < best_d || (d == best_d && scanline_less(p, best))) {
        best_d = d;
        best = p;
      }
    }
    return best;
  };

  InputUnion u(table.lattice().sub_count());
  std::vector<std::vector<Pixel>> sets;
  std::vector<Pixel> cur;
  Pixel cand = unassigned.count(seed) ? seed : nearest_unassigned(seed);
  while (true) {
    const auto& in = table.inputs(cand);
    if (!cur.empty() && u.size_with(in) > M) {
      sets.push_back(std::move(cur));
      cur.clear();
      u.clear();
    }
    u.add(in);
    cur.push_back(cand);
    unassigned.erase(cand);
    if (unassigned.empty()) break;

    const Pixel last = cand;
    bool found = false;
    std::size_t best_size = 0;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {  // scanline order, so strict < keeps the first tie
        const Pixel q{last.x + dx, last.y + dy};
        if ((dx == 0 && dy == 0) || !unassigned.count(q)) continue;
        const std::size_t s = u.size_with(table.inputs(q));
        if (!found || s < best_size) {
          found = true;
          best_size = s;
          cand = q;
        }
      }
    }
    if (!found) cand = nearest_unassigned(last);
  }
  sets.push_back(std::move(cur));
  return sets;
}

}  // namespace

NeighborTable::NeighborTable(const LatticePair& lattice, int L) : lattice_(lattice), L_(L) {
  for (std::size_t r = 0; r < lattice.representative_count(); ++r) {
    const Pixel pos = lattice.probe_position(lattice.representative_index(static_cast<int>(r)));
    std::vector<Pixel> offs;
    for (const auto& nb : neighbor_set(pos, lattice, L)) offs.push_back(nb.offset);
    rep_offsets_.push_back(std::move(offs));
  }
}

const std::vector<int>& NeighborTable::inputs(Pixel probe_index) const {
  const long long key = probe_key(probe_index);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const Pixel pos = lattice_.probe_position(probe_index);
  std::vector<int> in;
  for (const Pixel off : rep_offsets_[static_cast<std::size_t>(lattice_.representative_of(probe_index))]) {
    const auto idx = lattice_.input_index({pos.x + off.x, pos.y + off.y});
    if (!idx) throw InvalidArgument("neighbor offset off the input lattice");
    in.push_back(*idx);
  }
  std::sort(in.begin(), in.end());
  return cache_.emplace(key, std::move(in)).first->second;
}

std::vector<int> needed_inputs(const std::vector<Pixel>& probes, const NeighborTable& table) {
  std::vector<int> all;
  for (const Pixel p : probes) {
    const auto& in = table.inputs(p);
    all.insert(all.end(), in.begin(), in.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

std::size_t needed_input_count(const std::vector<Pixel>& probes, const NeighborTable& table) {
  return needed_inputs(probes, table).size();
}

PartitionStrategy parse_strategy(const std::string& s) {
  if (s == "row_by_row") return PartitionStrategy::row_by_row;
  if (s == "rectangles") return PartitionStrategy::rectangles;
  if (s == "greedy") return PartitionStrategy::greedy;
  throw InvalidArgument("unknown partition strategy '" + s + "' (row_by_row, rectangles, greedy)");
}

const char* strategy_name(PartitionStrategy s) {
  switch (s) {
    case PartitionStrategy::row_by_row: return "row_by_row";
    case PartitionStrategy::rectangles: return "rectangles";
    case PartitionStrategy::greedy: return "greedy";
  }
  return "?";
}

std::size_t partition_cost(const Partition& partition, const NeighborTable& table) {
  std::size_t total = 0;
  std::vector<int> prev;
  for (std::size_t j = 0; j < partition.sets.size(); ++j) {
    auto cur = needed_inputs(partition.sets[j], table);
    total += cur.size();
    if (j > 0) {
      std::vector<int> both;
      std::set_intersection(prev.begin(), prev.end(), cur.begin(), cur.end(), std::back_inserter(both));
      total -= both.size();
    }
    prev = std::move(cur);
  }
  return total;
}

void validate_partition(const Partition& partition, const std::vector<Pixel>& pixels, const NeighborTable& table) {
  if (partition.memory_bound < static_cast<std::size_t>(table.L()))
    throw InvalidArgument("memory bound M = " + std::to_string(partition.memory_bound) + " is below L = " +
                          std::to_string(table.L()));
  std::set<Pixel> want(pixels.begin(), pixels.end());
  std::set<Pixel> got;
  for (const auto& s : partition.sets) {
    if (s.empty()) throw InvalidArgument("partition contains an empty set");
    for (const Pixel p : s)
      if (!got.insert(p).second) throw InvalidArgument("partition sets overlap");
    if (needed_input_count(s, table) > partition.memory_bound)
      throw InvalidArgument("partition set exceeds the memory bound");
  }
  if (got != want) throw InvalidArgument("partition does not cover the requested pixels exactly");
}

Partition partition_build(PartitionStrategy strategy, const std::vector<Pixel>& pixels, const NeighborTable& table,
                          std::size_t M, Pixel seed) {
  if (M < static_cast<std::size_t>(table.L()))
    throw InvalidArgument("memory bound M = " + std::to_string(M) + " must be >= L = " + std::to_string(table.L()));
  check_pixels(pixels, table.lattice());
  Partition out;
  out.memory_bound = M;
  if (pixels.empty()) return out;
  switch (strategy) {
    case PartitionStrategy::row_by_row: out.sets = row_by_row(pixels, table, M); break;
    case PartitionStrategy::rectangles: out.sets = rectangles(pixels, table, M); break;
    case PartitionStrategy::greedy: out.sets = greedy(pixels, table, M, seed); break;
  }
  return out;
}

void save_partition_pgm(const std::string& path, const Partition& partition, int probe_nx, int probe_ny) {
  std::vector<unsigned> value(static_cast<std::size_t>(probe_nx) * probe_ny, 0);
  const auto n = partition.sets.size();
  for (std::size_t j = 0; j < n; ++j)
    for (const Pixel p : partition.sets[j])
      value[static_cast<std::size_t>(p.y) * probe_nx + p.x] =
          static_cast<unsigned>(std::lround(65535.0 * static_cast<double>(j + 1) / static_cast<double>(n)));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  os << "P5\n" << probe_nx << ' ' << probe_ny << "\n65535\n";
  for (unsigned v : value) {
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    os.write(bytes, 2);
  }
}

RecomputePlan recompute_plan(const Specimen& old_spec, const Specimen& new_spec, const ApproxPlan& plan,
                             const std::vector<Pixel>& probes, const PropagatorSpec& prop,
                             const RecomputeOptions& opts) {
  const auto& g = old_spec.geometry();
  if (!(plan.lattice.geom == g)) throw InvalidArgument("plan and specimen geometries differ");
  const auto mask = changed_pixels(old_spec, new_spec, opts.change_tol);
  RecomputePlan out;
  for (int y = 0; y < g.ny; ++y)
    for (int x = 0; x < g.nx; ++x)
      if (mask[static_cast<std::size_t>(y) * g.nx + x]) out.changed_region.push_back({x, y});
  if (out.changed_region.empty()) return out;

  // Support of the input wave around its center.
  const ComplexField u = make_input_wave(plan.kind, plan.params, g);
  const double umax = u.norm_sup();
  double support = 0.0;
  for (int y = 0; y < g.ny; ++y)
    for (int x = 0; x < g.nx; ++x)
      if (std::abs(u(x, y)) > opts.support_tol * umax)
        support = std::max(support, std::hypot(signed_offset(x, g.nx) * g.px(), signed_offset(y, g.ny) * g.py()));

  const double angle = opts.spread_angle > 0 ? opts.spread_angle : 2.0 * plan.params.alpha_max;
  double spread = old_spec.thickness() * std::tan(angle);
  if (prop.variant == PropagationVariant::realspace) {
    const int n = old_spec.slice_count();
    spread = std::max(spread, std::hypot(n * (prop.k1 / 2) * g.px(), n * (prop.k2 / 2) * g.py()));
  }
  out.influence_radius = support + spread + std::hypot(g.px(), g.py());
  const double r2 = out.influence_radius * out.influence_radius;

  const auto& lat = plan.lattice;
  std::vector<unsigned char> affected(lat.sub_count(), 0);
  for (std::size_t i = 0; i < lat.sub_count(); ++i) {
    const Pixel c = lat.input_position(static_cast<int>(i));
    for (const Pixel q : out.changed_region) {
      const double dx = signed_offset(q.x - c.x, g.nx) * g.px();
      const double dy = signed_offset(q.y - c.y, g.ny) * g.py();
      if (dx * dx + dy * dy <= r2) {
        affected[i] = 1;
        break;
      }
    }
  }

  const NeighborTable table(lat, plan.L);
  std::set<int> redo;
  for (const Pixel p : probes) {
    const auto& in = table.inputs(p);
    bool hit = false;
    for (int i : in) hit = hit || affected[static_cast<std::size_t>(i)];
    if (!hit) continue;
    out.probes_to_redo.push_back(p);
    for (int i : in)
      if (affected[static_cast<std::size_t>(i)]) redo.insert(i);
  }
  out.inputs_to_redo.assign(redo.begin(), redo.end());
  return out;
}

}  // namespace lms
