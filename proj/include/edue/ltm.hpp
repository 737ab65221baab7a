#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "edue/core.hpp"
#include "edue/hilbert.hpp"
#include "edue/network.hpp"

namespace edue {

/// Path travel times D (h) and effective delays Psi (hour-equivalents) for
/// every departure step on the grid, including steps that carry no flow
/// (probed with a virtual vehicle riding the same cumulative curves).
struct DelayField {
  Matrix d;
  Matrix psi;
};

/// Cumulative vehicle counts at the two ends of one link, disaggregated by
/// path commodity. Sample m is the count at time t0 + m*dt; curves are
/// non-decreasing and the downstream curve never exceeds the upstream one.
struct LinkCurves {
  std::vector<std::size_t> commodities;     // path indices routed over this link
  std::vector<std::vector<double>> up;      // per commodity, per sample
  std::vector<std::vector<double>> down;
  std::vector<double> up_total;
  std::vector<double> down_total;
};

/// Minimum effective cost per OD pair: the cheapest (path, departure step)
/// cell among the OD's paths.
inline std::vector<double> od_min_cost(const DelayField& field, const Scenario& s) {
  if (field.psi.rows() != s.paths.size())
    throw Error(ErrorCode::dimension_mismatch, "od_min_cost: delay field does not cover all paths");
  std::vector<double> v(s.od_pairs.size());
  for (std::size_t w = 0; w < s.od_pairs.size(); ++w) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p : s.od_paths[w]) best = std::min(best, essential_infimum(field.psi.row(p)));
    v[w] = best;
  }
  return v;
}

struct LoadResult {
  double t0 = 0.0;
  double dt = 0.0;
  std::size_t n_samples = 0;   // curves carry counts at samples 0..n_samples-1
  std::vector<LinkCurves> links;
  Matrix depart_delay;         // |P| x n_steps travel times (h)
  std::vector<double> injected;  // per path, total vehicles put into the network
  std::vector<double> absorbed;  // per path, total vehicles that reached the destination
};

namespace detail {

inline double curve_at(const std::vector<double>& n, double t0, double dt, double t) {
  const std::size_t last = n.size() - 1;
  double pos = (t - t0) / dt;
  if (pos <= 0.0) return n.front();
  if (pos >= static_cast<double>(last)) return n.back();
  const std::size_t j = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(j);
  return n[j] + frac * (n[j + 1] - n[j]);
}

/// Earliest time s >= tmin with curve(s) >= c; flat stretches resolve to the
/// earliest crossing. The caller guarantees c <= curve.back().
inline double invert_from(const std::vector<double>& n, double t0, double dt, double c,
                          double tmin) {
  if (curve_at(n, t0, dt, tmin) >= c) return tmin;
  // first sample with count >= c; the crossing lies just before it
  std::size_t lo = 0, hi = n.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (n[mid] >= c)
      hi = mid;
    else
      lo = mid + 1;
  }
  double s;
  if (lo == 0) {
    s = t0;
  } else {
    const double seg = n[lo] - n[lo - 1];
    const double frac = seg > 0.0 ? (c - n[lo - 1]) / seg : 1.0;
    s = t0 + (static_cast<double>(lo - 1) + frac) * dt;
  }
  return std::max(s, tmin);
}

inline int wave_steps(double travel_time, double dt) {
  const int k = static_cast<int>(std::ceil(travel_time / dt - 1e-9));
  return std::max(1, k);
}

}  // namespace detail

/// Propagates the path departure rates through the network with a
/// kinematic-wave link model on per-commodity cumulative curves.
///
/// Per step, each link offers the vehicles that have reached its downstream
/// end (upstream curve shifted by the forward wave time) capped by the exit
/// capacity; offers split per commodity, each following its own next link.
/// Competing inflows share a link's receiving capacity proportionally to
/// their offers. Origins hold a spillover queue per commodity; destinations
/// absorb unconditionally. Loading continues past tf, growing the horizon
/// geometrically, until every vehicle has been absorbed.
///
/// Wave-time shifts round up to whole steps, so discrete free-flow times are
/// ceil(L/v_f/dt) steps; the bias vanishes as dt -> 0 and is exact whenever
/// L/v_f is a multiple of dt.
inline LoadResult load_network(const PathFlow& h, const Scenario& s) {
  const std::size_t n_paths = s.paths.size();
  const int n_steps = s.grid.n_steps;
  const double dt = s.grid.dt();
  const double t0 = s.grid.t0;
  if (h.rows() != n_paths || h.cols() != static_cast<std::size_t>(n_steps))
    throw Error(ErrorCode::dimension_mismatch, "load_network: flow matrix does not match scenario");
  for (double v : h)
    if (!(v >= -1e-9) || !std::isfinite(v))
      throw Error(ErrorCode::domain_error, "load_network: negative or non-finite departure rate");

  const std::size_t n_links = s.links.size();

  // static routing structure
  struct LinkInfo {
    int sf = 1, sb = 1;
    double cap_step = 0.0, storage = 0.0;
    std::vector<std::size_t> commodities;
    std::vector<int> next_link;        // -1 when the path ends here
    std::vector<int> next_slot;        // commodity slot on the next link
  };
  std::vector<LinkInfo> info(n_links);
  for (std::size_t a = 0; a < n_links; ++a) {
    info[a].sf = detail::wave_steps(s.links[a].free_flow_time(), dt);
    info[a].sb = detail::wave_steps(s.links[a].backward_wave_time(), dt);
    info[a].cap_step = s.links[a].flow_capacity * dt;
    info[a].storage = s.links[a].storage();
  }
  std::vector<std::vector<int>> slot_of(n_paths);  // per path, per hop: commodity slot
  for (std::size_t p = 0; p < n_paths; ++p) {
    const auto& hops = s.paths[p].link_idx;
    slot_of[p].resize(hops.size());
    for (std::size_t i = 0; i < hops.size(); ++i) {
      for (std::size_t j = i + 1; j < hops.size(); ++j)
        if (hops[i] == hops[j])
          throw Error(ErrorCode::structural,
                      "load_network: path '" + s.paths[p].id + "' repeats link '" +
                          s.links[hops[i]].id + "'");
      LinkInfo& li = info[hops[i]];
      slot_of[p][i] = static_cast<int>(li.commodities.size());
      li.commodities.push_back(p);
      li.next_link.push_back(i + 1 < hops.size() ? static_cast<int>(hops[i + 1]) : -1);
      li.next_slot.push_back(-1);  // filled below
    }
  }
  for (std::size_t a = 0; a < n_links; ++a) {
    LinkInfo& li = info[a];
    for (std::size_t c = 0; c < li.commodities.size(); ++c) {
      if (li.next_link[c] < 0) continue;
      const std::size_t p = li.commodities[c];
      const auto& hops = s.paths[p].link_idx;
      const std::size_t hop = static_cast<std::size_t>(
          std::find(hops.begin(), hops.end(), a) - hops.begin());
      li.next_slot[c] = slot_of[p][hop + 1];
    }
  }

  // cumulative injections at samples 0..n_steps
  std::vector<std::vector<double>> inj(n_paths, std::vector<double>(n_steps + 1, 0.0));
  std::vector<double> injected(n_paths, 0.0);
  double grand_total = 0.0;
  for (std::size_t p = 0; p < n_paths; ++p) {
    for (int k = 0; k < n_steps; ++k)
      inj[p][k + 1] = inj[p][k] + std::max(0.0, h(p, k)) * dt;
    injected[p] = inj[p][n_steps];
    grand_total += injected[p];
  }

  LoadResult out;
  out.t0 = t0;
  out.dt = dt;
  out.links.resize(n_links);
  out.injected = injected;
  out.absorbed.assign(n_paths, 0.0);

  double max_ff = 0.0;
  for (const auto& path : s.paths) {
    double ff = 0.0;
    for (std::size_t a : path.link_idx) ff += info[a].sf * dt;
    max_ff = std::max(max_ff, ff);
  }
  const std::size_t tail0 = static_cast<std::size_t>(std::ceil(3.0 * max_ff / dt)) + 2;
  std::size_t target_steps = static_cast<std::size_t>(n_steps) + tail0;
  const std::size_t cap_steps = 32 * target_steps + 1024;

  for (std::size_t a = 0; a < n_links; ++a) {
    LinkCurves& lc = out.links[a];
    lc.commodities = info[a].commodities;
    const std::size_t nc = lc.commodities.size();
    lc.up.assign(nc, std::vector<double>(1, 0.0));
    lc.down.assign(nc, std::vector<double>(1, 0.0));
    lc.up_total.assign(1, 0.0);
    lc.down_total.assign(1, 0.0);
    for (auto& v : lc.up) v.reserve(target_steps + 1);
    for (auto& v : lc.down) v.reserve(target_steps + 1);
  }

  // Origin spillover queues: one aggregate FIFO per (origin, first link),
  // discharged in arrival order with the commodity mix read off the joint
  // cumulative arrival curve.
  struct OriginGroup {
    std::size_t link = 0;
    std::vector<std::size_t> paths;
    std::vector<double> arrivals;  // aggregate cumulative injections at samples 0..n_steps
    double admitted = 0.0;
    double head_time = 0.0;
    double offer = 0.0;
  };
  std::vector<OriginGroup> groups;
  {
    std::vector<int> group_of_link(n_links, -1);
    for (std::size_t p = 0; p < n_paths; ++p) {
      const std::size_t b = s.paths[p].link_idx.front();
      if (group_of_link[b] < 0) {
        group_of_link[b] = static_cast<int>(groups.size());
        OriginGroup g;
        g.link = b;
        g.arrivals.assign(n_steps + 1, 0.0);
        g.head_time = t0;
        groups.push_back(std::move(g));
      }
      OriginGroup& g = groups[group_of_link[b]];
      g.paths.push_back(p);
      for (int j = 0; j <= n_steps; ++j) g.arrivals[j] += inj[p][j];
    }
  }

  std::vector<std::vector<double>> offer(n_links), up_delta(n_links);
  for (std::size_t a = 0; a < n_links; ++a) {
    offer[a].assign(info[a].commodities.size(), 0.0);
    up_delta[a].assign(info[a].commodities.size(), 0.0);
  }
  std::vector<double> receiving(n_links, 0.0), demand(n_links, 0.0), phi(n_links, 1.0);

  std::size_t m = 0;
  double in_network = grand_total;
  while (true) {
    for (; m < target_steps; ++m) {
      // offers at the downstream end of each link
      for (std::size_t a = 0; a < n_links; ++a) {
        const LinkInfo& li = info[a];
        LinkCurves& lc = out.links[a];
        double tot = 0.0;
        const long fwd = static_cast<long>(m) + 1 - li.sf;
        for (std::size_t c = 0; c < li.commodities.size(); ++c) {
          const double arrived = fwd >= 0 ? lc.up[c][static_cast<std::size_t>(fwd)] : 0.0;
          const double cand = std::max(0.0, arrived - lc.down[c][m]);
          offer[a][c] = cand;
          tot += cand;
        }
        if (tot > li.cap_step && tot > 0.0) {
          const double sigma = li.cap_step / tot;
          for (auto& v : offer[a]) v *= sigma;
        }
      }
      // receiving capacities and total demand per link
      for (std::size_t b = 0; b < n_links; ++b) {
        const LinkInfo& li = info[b];
        const LinkCurves& lc = out.links[b];
        const long bwd = static_cast<long>(m) + 1 - li.sb;
        const double freed = bwd >= 0 ? lc.down_total[static_cast<std::size_t>(bwd)] : 0.0;
        receiving[b] = std::max(0.0, std::min(li.cap_step, freed + li.storage - lc.up_total[m]));
        demand[b] = 0.0;
      }
      for (std::size_t a = 0; a < n_links; ++a) {
        const LinkInfo& li = info[a];
        for (std::size_t c = 0; c < li.commodities.size(); ++c)
          if (li.next_link[c] >= 0) demand[li.next_link[c]] += offer[a][c];
      }
      for (auto& g : groups) {
        const std::size_t arr_idx = std::min(m + 1, static_cast<std::size_t>(n_steps));
        g.offer = std::max(0.0, g.arrivals[arr_idx] - g.admitted);
        demand[g.link] += g.offer;
      }
      for (std::size_t b = 0; b < n_links; ++b)
        phi[b] = demand[b] > receiving[b] && demand[b] > 0.0 ? receiving[b] / demand[b] : 1.0;

      // transfers
      for (auto& v : up_delta)
        std::fill(v.begin(), v.end(), 0.0);
      for (std::size_t a = 0; a < n_links; ++a) {
        const LinkInfo& li = info[a];
        LinkCurves& lc = out.links[a];
        double down_sum = 0.0;
        for (std::size_t c = 0; c < li.commodities.size(); ++c) {
          double moved;
          if (li.next_link[c] >= 0) {
            moved = phi[li.next_link[c]] * offer[a][c];
            up_delta[li.next_link[c]][li.next_slot[c]] += moved;
          } else {
            moved = offer[a][c];
            const std::size_t p = li.commodities[c];
            out.absorbed[p] += moved;
            in_network -= moved;
          }
          lc.down[c].push_back(lc.down[c][m] + moved);
          down_sum += moved;
        }
        lc.down_total.push_back(lc.down_total[m] + down_sum);
      }
      for (auto& g : groups) {
        const double delta = phi[g.link] * g.offer;
        const double target = std::min(g.admitted + delta, g.arrivals.back());
        const double s2 = detail::invert_from(g.arrivals, t0, dt, target, g.head_time);
        for (std::size_t p : g.paths) {
          const double share = std::max(0.0, detail::curve_at(inj[p], t0, dt, s2) -
                                                 detail::curve_at(inj[p], t0, dt, g.head_time));
          up_delta[g.link][slot_of[p][0]] += share;
        }
        g.admitted = target;
        g.head_time = s2;
      }
      for (std::size_t b = 0; b < n_links; ++b) {
        LinkCurves& lc = out.links[b];
        double up_sum = 0.0;
        for (std::size_t c = 0; c < lc.commodities.size(); ++c) {
          lc.up[c].push_back(lc.up[c][m] + up_delta[b][c]);
          up_sum += up_delta[b][c];
        }
        lc.up_total.push_back(lc.up_total[m] + up_sum);
      }
    }

    if (m >= static_cast<std::size_t>(n_steps) && in_network <= 1e-9 * std::max(1.0, grand_total))
      break;
    if (target_steps >= cap_steps) {
      std::size_t worst = 0;
      double worst_content = -1.0;
      for (std::size_t a = 0; a < n_links; ++a) {
        const double content = out.links[a].up_total[m] - out.links[a].down_total[m];
        if (content > worst_content) {
          worst_content = content;
          worst = a;
        }
      }
      throw Error(ErrorCode::horizon_too_short,
                  "network failed to empty within " + std::to_string(target_steps) +
                      " steps; worst link '" + s.links[worst].id + "' still holds " +
                      std::to_string(worst_content) + " veh");
    }
    target_steps = std::min(cap_steps, target_steps * 2);
  }
  out.n_samples = m + 1;

  // travel-time extraction: a probe departing at each grid step rides the
  // cumulative curves of its own commodity, entering each link at the count
  // it holds there and leaving at the earliest crossing of the downstream
  // curve, never faster than the link's free-flow steps.
  out.depart_delay = Matrix(n_paths, n_steps);
  for (std::size_t p = 0; p < n_paths; ++p) {
    const auto& hops = s.paths[p].link_idx;
    for (int k = 0; k < n_steps; ++k) {
      const double depart = t0 + k * dt;
      double t = depart;
      double c = inj[p][k];
      // origin spillover queue: wait until the first link has admitted c
      {
        const LinkCurves& lc = out.links[hops.front()];
        const auto& entry = lc.up[slot_of[p][0]];
        c = std::min(c, entry.back());
        t = detail::invert_from(entry, t0, dt, c, t);
      }
      for (std::size_t i = 0; i < hops.size(); ++i) {
        const LinkCurves& lc = out.links[hops[i]];
        const int slot = slot_of[p][i];
        double centry = detail::curve_at(lc.up[slot], t0, dt, t);
        centry = std::min(centry, lc.down[slot].back());
        const double crossing = detail::invert_from(lc.down[slot], t0, dt, centry, t);
        t = std::max(crossing, t + info[hops[i]].sf * dt);
      }
      out.depart_delay(p, k) = t - depart;
    }
  }
  return out;
}

/// psi[p][k] = d[p][k] + f(t_k + d[p][k] - T_A), elementwise.
inline Matrix effective_delay(const Matrix& d, const ArrivalPenalty& f, const TimeGrid& grid) {
  if (d.cols() != static_cast<std::size_t>(grid.n_steps))
    throw Error(ErrorCode::dimension_mismatch, "effective_delay: matrix does not match grid");
  Matrix psi(d.rows(), d.cols());
  for (std::size_t p = 0; p < d.rows(); ++p) {
    for (std::size_t k = 0; k < d.cols(); ++k) {
      const double travel = d(p, k);
      if (!(travel >= 0.0) || !std::isfinite(travel))
        throw Error(ErrorCode::domain_error, "effective_delay: invalid travel time");
      const double arrival = grid.time(static_cast<int>(k)) + travel;
      psi(p, k) = travel + f(arrival - f.target_arrival);
    }
  }
  return psi;
}

/// The effective delay operator: network loading followed by the schedule
/// penalty. The single entry point every solver uses.
inline DelayField delay_operator(const PathFlow& h, const Scenario& s) {
  LoadResult load = load_network(h, s);
  DelayField f;
  f.d = std::move(load.depart_delay);
  f.psi = effective_delay(f.d, s.penalty, s.grid);
  return f;
}

/// Columnar dump of every cumulative curve: one row per sample, one column
/// per (link, commodity, end).
inline void dump_curves(const LoadResult& load, const Scenario& s, std::ostream& os) {
  os << "time";
  for (std::size_t a = 0; a < load.links.size(); ++a)
    for (std::size_t c = 0; c < load.links[a].commodities.size(); ++c) {
      const std::string& pid = s.paths[load.links[a].commodities[c]].id;
      os << ',' << s.links[a].id << '.' << pid << ".up"
         << ',' << s.links[a].id << '.' << pid << ".down";
    }
  os << '\n';
  char buf[32];
  for (std::size_t m = 0; m < load.n_samples; ++m) {
    std::snprintf(buf, sizeof(buf), "%.17g", load.t0 + m * load.dt);
    os << buf;
    for (const auto& lc : load.links)
      for (std::size_t c = 0; c < lc.commodities.size(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", lc.up[c][m]);
        os << ',' << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", lc.down[c][m]);
        os << ',' << buf;
      }
    os << '\n';
  }
}

}  // namespace edue
