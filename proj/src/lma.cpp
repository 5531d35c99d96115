#include "lms/lma.hpp"

#include <algorithm>
#include <set>

#include "lms/error.hpp"

namespace lms {

Pixel lma_store_window(const ApproxPlan& plan, const LmaOptions& opts) {
  const auto& g = plan.lattice.geom;
  const Pixel w = opts.store_window.value_or(Pixel{std::max(1, g.nx / plan.lattice.f), std::max(1, g.ny / plan.lattice.f)});
  if (w.x < 1 || w.y < 1 || w.x > g.nx || w.y > g.ny) throw InvalidArgument("LMA storage window exceeds the grid");
  return w;
}

void lma_propagate_inputs(const MultisliceSolver& solver, const ApproxPlan& plan, const ComplexField& u,
                          const std::vector<int>& inputs, Pixel store, InputBank& bank, OpCounters& counters,
                          kernels::Exec exec, bool overwrite) {
  std::vector<int> todo;
  for (int i : inputs)
    if (overwrite || !bank.count(i)) todo.push_back(i);
  const auto& lat = plan.lattice;
  auto waves = kernels::propagate_batch(
      solver, todo.size(),
      [&](std::size_t k) {
        const Pixel pos = lat.input_position(todo[k]);
        return std::make_pair(periodic_translate(u, pos), pos);
      },
      counters, store, exec);
  for (std::size_t k = 0; k < todo.size(); ++k) bank.insert_or_assign(todo[k], std::move(waves[k]));
}

std::vector<PlacedField> lma_combine(const ApproxPlan& plan, const InputBank& bank, const std::vector<Pixel>& probes,
                                     Pixel window, OpCounters& counters, kernels::Exec exec) {
  std::vector<const PlacedField*> sources;
  std::map<int, std::size_t> slot;
  std::vector<kernels::Combination> combos;
  combos.reserve(probes.size());
  for (const Pixel p : probes) {
    const ProbeTerms t = translate_plan_index(plan, p);
    kernels::Combination c;
    c.center = t.position;
    for (std::size_t k = 0; k < t.inputs.size(); ++k) {
      const int i = t.inputs[k];
      auto [it, fresh] = slot.try_emplace(i, sources.size());
      if (fresh) {
        auto b = bank.find(i);
        if (b == bank.end()) throw InvalidArgument("input wave " + std::to_string(i) + " has not been propagated");
        sources.push_back(&b->second);
      }
      c.terms.push_back({t.coeffs[k], it->second});
    }
    combos.push_back(std::move(c));
  }
  return kernels::combine_batch(sources, combos, plan.lattice.geom, window, counters, exec);
}

LmaResult lma_simulate(const Specimen& spec, const ApproxPlan& plan, const std::vector<Pixel>& probes,
                       const LmaOptions& opts, OpCounters& counters, InputBank* keep) {
  if (!(spec.geometry() == plan.lattice.geom)) throw InvalidArgument("plan and specimen geometries differ");
  const Pixel store = lma_store_window(plan, opts);
  const MultisliceSolver solver(spec, plan.params, opts.propagator);
  const ComplexField u = make_input_wave(plan.kind, plan.params, plan.lattice.geom);
  const NeighborTable table(plan.lattice, plan.L);
  LmaResult result;
  InputBank local;
  InputBank& bank = keep ? *keep : local;

  if (opts.schedule == nullptr) {
    const auto needed = needed_inputs(probes, table);
    lma_propagate_inputs(solver, plan, u, needed, store, bank, counters, opts.exec);
    result.peak_resident = bank.size();
    result.exits = lma_combine(plan, bank, probes, store, counters, opts.exec);
    return result;
  }

  const Partition& part = *opts.schedule;
  validate_partition(part, probes, table);
  std::map<Pixel, std::size_t> where;
  for (std::size_t k = 0; k < probes.size(); ++k) where.emplace(probes[k], k);
  result.exits.resize(probes.size());
  for (const auto& set : part.sets) {
    const auto needed = needed_inputs(set, table);
    // Drop what this set does not use, then fill the gap.
    const std::set<int> keep_set(needed.begin(), needed.end());
    for (auto it = bank.begin(); it != bank.end();) it = keep_set.count(it->first) ? std::next(it) : bank.erase(it);
    lma_propagate_inputs(solver, plan, u, needed, store, bank, counters, opts.exec);
    result.peak_resident = std::max(result.peak_resident, bank.size());
    auto exits = lma_combine(plan, bank, set, store, counters, opts.exec);
    for (std::size_t k = 0; k < set.size(); ++k) result.exits[where.at(set[k])] = std::move(exits[k]);
  }
  return result;
}

}  // namespace lms
