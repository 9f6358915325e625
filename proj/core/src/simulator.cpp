#include "qnet/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <queue>
#include <thread>
#include <tuple>

#include "qnet/errors.hpp"
#include "qnet/rng.hpp"

namespace qnet {

namespace {

// Two-sided 95% Student-t quantiles by degrees of freedom.
double t_quantile_975(int df) {
    static constexpr double table[30] = {
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
        2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
        2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
    if (df < 1) return 0.0;
    if (df <= 30) return table[df - 1];
    if (df <= 40) return 2.021;
    if (df <= 60) return 2.000;
    if (df <= 120) return 1.980;
    return 1.960;
}

Estimate make_estimate(const std::vector<double>& xs) {
    Estimate e;
    const std::size_t n = xs.size();
    if (n == 0) return e;
    double sum = 0.0;
    for (double x : xs) sum += x;
    e.mean = sum / static_cast<double>(n);
    if (n < 2) return e;
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    e.half_width = t_quantile_975(static_cast<int>(n) - 1) * sd /
                   std::sqrt(static_cast<double>(n));
    return e;
}

// ---------------------------------------------------------------------------
// Compiled network: immutable per-run tables shared by all replications.
// ---------------------------------------------------------------------------

struct Hop {
    double cum; // cumulative probability within the row
    int node;
    int cls;
};

struct RoutingRow {
    std::vector<Hop> hops;
    double total = 0.0; // mass staying in the network; departure beyond
    bool trivial = false; // exactly one hop, total == 1: no draw needed
};

struct CompiledNode {
    std::string id;
    Discipline disc = Discipline::fcfs;
    int servers = 1;
    double inst_speed = 1.0;   // capacity factor: work units per second per instance
    double pool_speed = 1.0;   // servers * inst_speed (PS sharing pool)
    std::vector<double> class_mu; // per-class work-requirement rate
    ServiceOverride::Kind svc_kind = ServiceOverride::Kind::exponential;
    std::vector<double> svc_samples;
};

struct Compiled {
    std::vector<CompiledNode> nodes;
    std::vector<RoutingRow> rows; // indexed node * L + class
    RoutingRow entry;             // hops over (node, class=-1): node entry row
    std::vector<double> class_entry_cum;
    bool single_class = true;
    bool entry_trivial = false;
    int trivial_entry_node = 0;
    bool class_trivial = true;
    int trivial_class = 0;
    int n = 0, L = 0;
    const BulkSpec* bulk = nullptr;
    std::vector<std::pair<double, long long>> bulk_cum; // empirical bulk CDF
    double event_rate = 0.0;
};

RoutingRow build_row(const NetworkSpec& spec, std::size_t j, std::size_t l) {
    const std::size_t n = spec.node_count();
    const std::size_t L = spec.class_count();
    RoutingRow row;
    double cum = 0.0;
    if (!spec.routing.class_hop.empty()) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t r = 0; r < L; ++r) {
                const double p = spec.routing.class_hop[j * L + l][i * L + r];
                if (p > 0.0) {
                    cum += p;
                    row.hops.push_back({cum, static_cast<int>(i), static_cast<int>(r)});
                }
            }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = spec.routing.hop[j][i];
            if (p > 0.0) {
                cum += p;
                row.hops.push_back({cum, static_cast<int>(i), static_cast<int>(l)});
            }
        }
    }
    row.total = cum;
    row.trivial = row.hops.size() == 1 && std::abs(cum - 1.0) < 1e-15;
    return row;
}

Compiled compile(const SimConfig& cfg) {
    const NetworkSpec& spec = cfg.spec;
    Compiled c;
    c.n = static_cast<int>(spec.node_count());
    c.L = static_cast<int>(spec.class_count());
    c.single_class = c.L == 1;
    c.event_rate = spec.arrival_rate;
    if (spec.bulk) {
        c.bulk = &*spec.bulk;
        if (spec.bulk->kind == BulkSpec::Kind::empirical) {
            double cum = 0.0;
            for (const auto& [k, p] : spec.bulk->pmf) {
                cum += p;
                c.bulk_cum.emplace_back(cum, k);
            }
        }
    }

    c.nodes.resize(static_cast<std::size_t>(c.n));
    for (int i = 0; i < c.n; ++i) {
        const NodeSpec& nd = spec.nodes[static_cast<std::size_t>(i)];
        CompiledNode& cn = c.nodes[static_cast<std::size_t>(i)];
        cn.id = nd.id;
        cn.disc = nd.discipline;
        cn.servers = nd.servers;
        cn.inst_speed = nd.capacity_factor;
        cn.pool_speed = static_cast<double>(nd.servers) * nd.capacity_factor;
        cn.class_mu.resize(static_cast<std::size_t>(c.L));
        for (int l = 0; l < c.L; ++l)
            cn.class_mu[static_cast<std::size_t>(l)] =
                nd.class_rate(spec.classes[static_cast<std::size_t>(l)].id);
        if (auto it = cfg.service_overrides.find(nd.id); it != cfg.service_overrides.end()) {
            cn.svc_kind = it->second.kind;
            cn.svc_samples = it->second.samples;
            if (cn.svc_kind == ServiceOverride::Kind::empirical && cn.svc_samples.empty())
                throw Error("empirical service override for node '" + nd.id +
                            "' has no samples");
        }
    }

    c.rows.resize(static_cast<std::size_t>(c.n * c.L));
    for (int j = 0; j < c.n; ++j)
        for (int l = 0; l < c.L; ++l)
            c.rows[static_cast<std::size_t>(j * c.L + l)] =
                build_row(spec, static_cast<std::size_t>(j), static_cast<std::size_t>(l));

    double cum = 0.0;
    int nonzero = 0;
    for (int i = 0; i < c.n; ++i) {
        const double p = spec.routing.entry[static_cast<std::size_t>(i)];
        if (p > 0.0) {
            cum += p;
            c.entry.hops.push_back({cum, i, 0});
            c.trivial_entry_node = i;
            ++nonzero;
        }
    }
    c.entry.total = cum;
    c.entry_trivial = nonzero == 1;

    c.class_entry_cum.resize(static_cast<std::size_t>(c.L));
    double ccum = 0.0;
    int cnz = 0;
    for (int l = 0; l < c.L; ++l) {
        const double p = spec.classes[static_cast<std::size_t>(l)].entry_probability;
        ccum += p;
        c.class_entry_cum[static_cast<std::size_t>(l)] = ccum;
        if (p > 0.0) {
            c.trivial_class = l;
            ++cnz;
        }
    }
    c.class_trivial = cnz <= 1;
    return c;
}

// ---------------------------------------------------------------------------
// Per-replication engine.
// ---------------------------------------------------------------------------

enum class EventKind : std::uint8_t { external_arrival, fcfs_done, ps_done };

struct Event {
    double t = 0.0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::external_arrival;
    std::int32_t node = -1;
    std::int32_t job = -1;
    std::uint64_t version = 0;
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        if (a.t != b.t) return a.t > b.t;
        return a.seq > b.seq;
    }
};

struct Job {
    long long uid = 0;
    double t_network = 0.0; // external arrival instant
    double t_node = 0.0;    // arrival at the current node
    double t_start = 0.0;   // FCFS: service start
    double work = 0.0;      // sampled requirement, work units
    int cls = 0;
};

// Per-node running statistics. Counter-like fields are windowed by
// subtracting a snapshot taken at the warmup boundary; area integrals
// are flushed to the boundary and reset instead.
struct NodeAcc {
    double t_stamp = 0.0;
    double area_q = 0.0;    // FCFS: waiting jobs * dt
    double area_sys = 0.0;  // PS: resident jobs * dt
    double area_busy = 0.0; // FCFS: busy servers * dt; PS: nonempty * dt
    double sum_w = 0.0;
    double sum_t = 0.0;
    double served_seconds = 0.0; // PS: completed work / pool speed
    long long arrivals = 0;
    long long departures = 0;
    std::vector<double> cls_sum_w, cls_sum_t;
    std::vector<long long> cls_dep;
};

struct NodeRT {
    std::deque<int> fifo; // FCFS waiting line (job slots)
    int busy = 0;         // FCFS busy servers
    // PS: egalitarian sharing via a virtual per-job service clock.
    std::priority_queue<std::tuple<double, long long, int>,
                        std::vector<std::tuple<double, long long, int>>,
                        std::greater<>>
        ps_heap; // (virtual finish mark, job uid, job slot)
    int ps_count = 0;
    double v_now = 0.0;
    std::uint64_t version = 0;
};

struct RepOutcome {
    struct PerNode {
        double w = 0.0, q = 0.0, t = 0.0, util = 0.0, lambda = 0.0;
        long long arrivals = 0, departures = 0;
        std::vector<double> cls_w, cls_t;
        std::vector<long long> cls_dep;
    };
    std::vector<PerNode> nodes;
    double chain_t = 0.0;
    long long ext_arrivals = 0;
    long long completions = 0;
    double end_time = 0.0;
};

class Engine {
public:
    Engine(const SimConfig& cfg, const Compiled& c, int rep, std::ofstream* trace)
        : cfg_(cfg),
          c_(c),
          trace_(trace),
          arrival_rng_(stream_seed(cfg.seed, static_cast<std::uint64_t>(rep), 0, 1)),
          bulk_rng_(stream_seed(cfg.seed, static_cast<std::uint64_t>(rep), 0, 2)),
          entry_rng_(stream_seed(cfg.seed, static_cast<std::uint64_t>(rep), 0, 3)),
          class_rng_(stream_seed(cfg.seed, static_cast<std::uint64_t>(rep), 0, 4)) {
        const auto nn = static_cast<std::size_t>(c.n);
        rt_.resize(nn);
        acc_.resize(nn);
        for (std::size_t i = 0; i < nn; ++i) {
            const auto ll = static_cast<std::size_t>(c.L);
            acc_[i].cls_sum_w.assign(ll, 0.0);
            acc_[i].cls_sum_t.assign(ll, 0.0);
            acc_[i].cls_dep.assign(ll, 0);
            svc_rng_.emplace_back(
                stream_seed(cfg.seed, static_cast<std::uint64_t>(rep), i + 1, 5));
            route_rng_.emplace_back(
                stream_seed(cfg.seed, static_cast<std::uint64_t>(rep), i + 1, 6));
        }
        warm_snapshot_ = acc_; // all-zero snapshot until the warmup boundary
    }

    RepOutcome run() {
        const bool by_jobs = cfg_.job_horizon > 0;
        const double warmup_t = cfg_.time_horizon * cfg_.warmup_fraction;
        warmup_jobs_ = by_jobs ? static_cast<long long>(std::llround(
                                     static_cast<double>(cfg_.job_horizon) *
                                     cfg_.warmup_fraction))
                               : 0;
        if (by_jobs && warmup_jobs_ == 0) warmed_ = true, window_start_ = 0.0;
        if (!by_jobs && warmup_t == 0.0) warmed_ = true, window_start_ = 0.0;

        schedule_arrival(0.0);
        double end_time = cfg_.time_horizon;
        while (!heap_.empty()) {
            const Event ev = heap_.top();
            heap_.pop();
            if (!by_jobs && ev.t > cfg_.time_horizon) break;
            if (!by_jobs && !warmed_ && ev.t >= warmup_t) warm_flush(warmup_t);
            dispatch(ev);
            if (by_jobs && completions_ >= cfg_.job_horizon) {
                end_time = ev.t;
                break;
            }
        }
        if (!warmed_) warm_flush(end_time); // degenerate: whole run was warmup
        for (int i = 0; i < c_.n; ++i) flush_node(i, end_time);

        return collect(end_time);
    }

private:
    // --- event plumbing ---

    void push(double t, EventKind kind, int node, int job, std::uint64_t version = 0) {
        heap_.push(Event{t, seq_++, kind, node, job, version});
    }

    void schedule_arrival(double now) {
        push(now + arrival_rng_.exponential(c_.event_rate), EventKind::external_arrival, -1,
             -1);
    }

    void dispatch(const Event& ev) {
        switch (ev.kind) {
            case EventKind::external_arrival: on_external(ev); break;
            case EventKind::fcfs_done: on_fcfs_done(ev); break;
            case EventKind::ps_done: on_ps_done(ev); break;
        }
    }

    // --- random draws ---

    long long draw_bulk_size() {
        if (!c_.bulk) return 1;
        switch (c_.bulk->kind) {
            case BulkSpec::Kind::deterministic: return c_.bulk->size;
            case BulkSpec::Kind::uniform: return bulk_rng_.uniform_int(1, c_.bulk->size);
            case BulkSpec::Kind::geometric: return bulk_rng_.geometric(c_.bulk->p);
            case BulkSpec::Kind::empirical: {
                const double u = bulk_rng_.uniform01();
                for (const auto& [cum, k] : c_.bulk_cum)
                    if (u < cum) return k;
                return c_.bulk_cum.back().second;
            }
        }
        return 1;
    }

    int draw_entry_node() {
        if (c_.entry_trivial) return c_.trivial_entry_node;
        const double u = entry_rng_.uniform01() * c_.entry.total;
        for (const Hop& h : c_.entry.hops)
            if (u < h.cum) return h.node;
        return c_.entry.hops.back().node;
    }

    int draw_entry_class() {
        if (c_.class_trivial) return c_.trivial_class;
        const double u = class_rng_.uniform01();
        for (int l = 0; l < c_.L; ++l)
            if (u < c_.class_entry_cum[static_cast<std::size_t>(l)]) return l;
        return c_.L - 1;
    }

    double sample_work(int node, int cls) {
        const CompiledNode& cn = c_.nodes[static_cast<std::size_t>(node)];
        const double mu = cn.class_mu[static_cast<std::size_t>(cls)];
        switch (cn.svc_kind) {
            case ServiceOverride::Kind::exponential:
                return svc_rng_[static_cast<std::size_t>(node)].exponential(mu);
            case ServiceOverride::Kind::deterministic: return 1.0 / mu;
            case ServiceOverride::Kind::empirical: {
                auto& rng = svc_rng_[static_cast<std::size_t>(node)];
                const auto idx = rng.uniform_int(
                    0, static_cast<long long>(cn.svc_samples.size()) - 1);
                return cn.svc_samples[static_cast<std::size_t>(idx)];
            }
        }
        return 1.0 / mu;
    }

    // --- job pool ---

    int alloc_job() {
        if (!free_.empty()) {
            const int slot = free_.back();
            free_.pop_back();
            return slot;
        }
        jobs_.emplace_back();
        return static_cast<int>(jobs_.size()) - 1;
    }

    void free_job(int slot) { free_.push_back(slot); }

    // --- statistics plumbing ---

    // Advances the node's time integrals (and, for PS, the virtual service
    // clock) to time t. Every state change goes through here first.
    void flush_node(int node, double t) {
        NodeAcc& a = acc_[static_cast<std::size_t>(node)];
        NodeRT& r = rt_[static_cast<std::size_t>(node)];
        const double dt = t - a.t_stamp;
        if (dt <= 0.0) return;
        const CompiledNode& cn = c_.nodes[static_cast<std::size_t>(node)];
        if (cn.disc == Discipline::fcfs) {
            a.area_q += static_cast<double>(r.fifo.size()) * dt;
            a.area_busy += static_cast<double>(r.busy) * dt;
        } else {
            a.area_sys += static_cast<double>(r.ps_count) * dt;
            if (r.ps_count > 0) {
                a.area_busy += dt;
                r.v_now += dt * cn.pool_speed / static_cast<double>(r.ps_count);
            }
        }
        a.t_stamp = t;
    }

    void warm_flush(double t) {
        for (int i = 0; i < c_.n; ++i) {
            flush_node(i, t);
            NodeAcc& a = acc_[static_cast<std::size_t>(i)];
            a.area_q = a.area_sys = a.area_busy = 0.0;
        }
        warm_snapshot_ = acc_; // counter fields; areas in the copy are zero
        chain_sum_snap_ = chain_sum_;
        completions_snap_ = completions_;
        ext_arrivals_snap_ = ext_arrivals_;
        window_start_ = t;
        warmed_ = true;
    }

    void trace(double t, int node, const Job& j, const char* kind) {
        if (!trace_) return;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.9g,%s,%lld,%s,%s\n", t,
                      c_.nodes[static_cast<std::size_t>(node)].id.c_str(), j.uid,
                      cfg_.spec.classes[static_cast<std::size_t>(j.cls)].id.c_str(), kind);
        *trace_ << buf;
    }

    // --- event handlers ---

    void on_external(const Event& ev) {
        schedule_arrival(ev.t);
        const long long batch = draw_bulk_size();
        const int entry = draw_entry_node();
        for (long long k = 0; k < batch; ++k) {
            const int cls = draw_entry_class();
            const int slot = alloc_job();
            Job& j = jobs_[static_cast<std::size_t>(slot)];
            j.uid = next_uid_++;
            j.t_network = ev.t;
            j.cls = cls;
            ++ext_arrivals_;
            arrive(entry, slot, ev.t);
        }
    }

    void arrive(int node, int slot, double t) {
        flush_node(node, t);
        Job& j = jobs_[static_cast<std::size_t>(slot)];
        j.t_node = t;
        NodeRT& r = rt_[static_cast<std::size_t>(node)];
        NodeAcc& a = acc_[static_cast<std::size_t>(node)];
        ++a.arrivals;
        trace(t, node, j, "arrive");
        const CompiledNode& cn = c_.nodes[static_cast<std::size_t>(node)];
        if (cn.disc == Discipline::fcfs) {
            if (r.busy < cn.servers)
                start_service(node, slot, t);
            else
                r.fifo.push_back(slot);
        } else {
            j.work = sample_work(node, j.cls);
            r.ps_heap.emplace(r.v_now + j.work, j.uid, slot);
            ++r.ps_count;
            trace(t, node, j, "start");
            reschedule_ps(node, t);
        }
    }

    void start_service(int node, int slot, double t) {
        Job& j = jobs_[static_cast<std::size_t>(slot)];
        j.work = sample_work(node, j.cls);
        j.t_start = t;
        NodeRT& r = rt_[static_cast<std::size_t>(node)];
        ++r.busy;
        const CompiledNode& cn = c_.nodes[static_cast<std::size_t>(node)];
        push(t + j.work / cn.inst_speed, EventKind::fcfs_done, node, slot);
        trace(t, node, j, "start");
    }

    void reschedule_ps(int node, double now) {
        NodeRT& r = rt_[static_cast<std::size_t>(node)];
        ++r.version;
        if (r.ps_count == 0) {
            r.v_now = 0.0; // rebase the virtual clock while idle
            return;
        }
        const CompiledNode& cn = c_.nodes[static_cast<std::size_t>(node)];
        const double v_need = std::max(std::get<0>(r.ps_heap.top()) - r.v_now, 0.0);
        const double t_done =
            now + v_need * static_cast<double>(r.ps_count) / cn.pool_speed;
        push(t_done, EventKind::ps_done, node, -1, r.version);
    }

    void on_fcfs_done(const Event& ev) {
        const int node = ev.node;
        flush_node(node, ev.t);
        NodeRT& r = rt_[static_cast<std::size_t>(node)];
        --r.busy;
        const int slot = ev.job;
        Job& j = jobs_[static_cast<std::size_t>(slot)];
        NodeAcc& a = acc_[static_cast<std::size_t>(node)];
        const double w = j.t_start - j.t_node;
        const double tt = ev.t - j.t_node;
        a.sum_w += w;
        a.sum_t += tt;
        ++a.departures;
        a.cls_sum_w[static_cast<std::size_t>(j.cls)] += w;
        a.cls_sum_t[static_cast<std::size_t>(j.cls)] += tt;
        ++a.cls_dep[static_cast<std::size_t>(j.cls)];
        trace(ev.t, node, j, "depart");
        if (!r.fifo.empty()) {
            const int next = r.fifo.front();
            r.fifo.pop_front();
            start_service(node, next, ev.t);
        }
        route(node, slot, ev.t);
    }

    void on_ps_done(const Event& ev) {
        const int node = ev.node;
        NodeRT& r = rt_[static_cast<std::size_t>(node)];
        if (ev.version != r.version) return; // superseded prediction
        flush_node(node, ev.t);
        const auto [v_done, uid, slot] = r.ps_heap.top();
        r.ps_heap.pop();
        --r.ps_count;
        Job& j = jobs_[static_cast<std::size_t>(slot)];
        NodeAcc& a = acc_[static_cast<std::size_t>(node)];
        const CompiledNode& cn = c_.nodes[static_cast<std::size_t>(node)];
        const double full_service = j.work / cn.pool_speed;
        const double tt = ev.t - j.t_node;
        const double w = tt - full_service;
        a.sum_w += w;
        a.sum_t += tt;
        a.served_seconds += full_service;
        ++a.departures;
        a.cls_sum_w[static_cast<std::size_t>(j.cls)] += w;
        a.cls_sum_t[static_cast<std::size_t>(j.cls)] += tt;
        ++a.cls_dep[static_cast<std::size_t>(j.cls)];
        trace(ev.t, node, j, "depart");
        reschedule_ps(node, ev.t);
        route(node, slot, ev.t);
    }

    void route(int from, int slot, double t) {
        Job& j = jobs_[static_cast<std::size_t>(slot)];
        const RoutingRow& row = c_.rows[static_cast<std::size_t>(from * c_.L + j.cls)];
        if (!row.hops.empty()) {
            if (row.trivial) {
                j.cls = row.hops[0].cls;
                arrive(row.hops[0].node, slot, t);
                return;
            }
            const double u = route_rng_[static_cast<std::size_t>(from)].uniform01();
            if (u < row.total) {
                for (const Hop& h : row.hops)
                    if (u < h.cum) {
                        j.cls = h.cls;
                        arrive(h.node, slot, t);
                        return;
                    }
            }
        }
        // Network departure.
        chain_sum_ += t - j.t_network;
        ++completions_;
        free_job(slot);
        if (cfg_.job_horizon > 0 && !warmed_ && completions_ >= warmup_jobs_) warm_flush(t);
    }

    // --- aggregation ---

    RepOutcome collect(double end_time) const {
        RepOutcome out;
        const double window = std::max(end_time - window_start_, 0.0);
        out.end_time = end_time;
        out.ext_arrivals = ext_arrivals_ - ext_arrivals_snap_;
        out.completions = completions_ - completions_snap_;
        const double chain_sum = chain_sum_ - chain_sum_snap_;
        out.chain_t = out.completions > 0 ? chain_sum / static_cast<double>(out.completions)
                                          : 0.0;
        out.nodes.resize(static_cast<std::size_t>(c_.n));
        for (int i = 0; i < c_.n; ++i) {
            const NodeAcc& a = acc_[static_cast<std::size_t>(i)];
            const NodeAcc& s = warm_snapshot_[static_cast<std::size_t>(i)];
            const CompiledNode& cn = c_.nodes[static_cast<std::size_t>(i)];
            RepOutcome::PerNode& pn = out.nodes[static_cast<std::size_t>(i)];
            pn.arrivals = a.arrivals - s.arrivals;
            pn.departures = a.departures - s.departures;
            const double dep = static_cast<double>(pn.departures);
            pn.w = pn.departures > 0 ? (a.sum_w - s.sum_w) / dep : 0.0;
            pn.t = pn.departures > 0 ? (a.sum_t - s.sum_t) / dep : 0.0;
            if (window > 0.0) {
                if (cn.disc == Discipline::fcfs) {
                    pn.q = a.area_q / window;
                    pn.util = a.area_busy / (static_cast<double>(cn.servers) * window);
                } else {
                    pn.q = (a.area_sys - (a.served_seconds - s.served_seconds)) / window;
                    pn.util = a.area_busy / window;
                }
                pn.lambda = static_cast<double>(pn.arrivals) / window;
            }
            pn.cls_w.resize(static_cast<std::size_t>(c_.L));
            pn.cls_t.resize(static_cast<std::size_t>(c_.L));
            pn.cls_dep.resize(static_cast<std::size_t>(c_.L));
            for (int l = 0; l < c_.L; ++l) {
                const auto li = static_cast<std::size_t>(l);
                pn.cls_dep[li] = a.cls_dep[li] - s.cls_dep[li];
                const double d = static_cast<double>(pn.cls_dep[li]);
                pn.cls_w[li] = pn.cls_dep[li] > 0 ? (a.cls_sum_w[li] - s.cls_sum_w[li]) / d : 0.0;
                pn.cls_t[li] = pn.cls_dep[li] > 0 ? (a.cls_sum_t[li] - s.cls_sum_t[li]) / d : 0.0;
            }
        }
        return out;
    }

    const SimConfig& cfg_;
    const Compiled& c_;
    std::ofstream* trace_;

    RandomStream arrival_rng_, bulk_rng_, entry_rng_, class_rng_;
    std::vector<RandomStream> svc_rng_, route_rng_;

    std::priority_queue<Event, std::vector<Event>, EventAfter> heap_;
    std::uint64_t seq_ = 0;
    std::vector<Job> jobs_;
    std::vector<int> free_;
    long long next_uid_ = 0;

    std::vector<NodeRT> rt_;
    std::vector<NodeAcc> acc_;
    std::vector<NodeAcc> warm_snapshot_;
    double chain_sum_ = 0.0, chain_sum_snap_ = 0.0;
    long long completions_ = 0, completions_snap_ = 0;
    long long ext_arrivals_ = 0, ext_arrivals_snap_ = 0;
    long long warmup_jobs_ = 0;
    bool warmed_ = false;
    double window_start_ = 0.0;
};

void check_config(const SimConfig& cfg) {
    const bool by_time = cfg.time_horizon > 0.0;
    const bool by_jobs = cfg.job_horizon > 0;
    if (by_time == by_jobs)
        throw Error("exactly one of time_horizon or job_horizon must be set");
    if (cfg.warmup_fraction < 0.0 || cfg.warmup_fraction > 0.5)
        throw Error("warmup fraction must lie in [0, 0.5]");
    if (cfg.replications < 1) throw Error("at least one replication is required");
    if (!(cfg.spec.arrival_rate > 0.0)) throw Error("spec arrival rate must be > 0");
    if (cfg.spec.node_count() == 0) throw Error("spec has no nodes");
    for (const auto& [id, ov] : cfg.service_overrides)
        if (cfg.spec.node_index(id) < 0)
            throw Error("service override for unknown node '" + id + "'");
}

} // namespace

const NodeStats& SimResult::at(const std::string& id) const {
    for (const auto& ns : nodes)
        if (ns.id == id) return ns;
    throw Error("no node named '" + id + "' in simulation result");
}

SimResult simulate(const SimConfig& cfg) {
    check_config(cfg);
    const Compiled compiled = compile(cfg);
    const int reps = cfg.replications;

    std::ofstream trace_file;
    if (!cfg.trace_path.empty()) {
        trace_file.open(cfg.trace_path, std::ios::binary);
        if (!trace_file) throw Error("cannot open trace file '" + cfg.trace_path + "'");
        trace_file << "time,node,job,class,kind\n";
    }

    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));
    const int threads = std::clamp(cfg.threads, 1, reps);
    if (threads <= 1) {
        for (int r = 0; r < reps; ++r) {
            Engine eng(cfg, compiled, r, (r == 0 && trace_file.is_open()) ? &trace_file : nullptr);
            outcomes[static_cast<std::size_t>(r)] = eng.run();
        }
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) {
                Engine eng(cfg, compiled, r,
                           (r == 0 && trace_file.is_open()) ? &trace_file : nullptr);
                outcomes[static_cast<std::size_t>(r)] = eng.run();
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    SimResult res;
    res.seed = cfg.seed;
    res.replications = reps;
    res.warmup_fraction = cfg.warmup_fraction;
    res.nodes.resize(cfg.spec.node_count());

    const auto reps_sz = static_cast<std::size_t>(reps);
    std::vector<double> buf(reps_sz);
    auto estimate = [&](auto&& get) {
        for (std::size_t r = 0; r < reps_sz; ++r) buf[r] = get(outcomes[r]);
        return make_estimate(buf);
    };

    for (std::size_t i = 0; i < cfg.spec.node_count(); ++i) {
        NodeStats& ns = res.nodes[i];
        ns.id = cfg.spec.nodes[i].id;
        ns.waiting = estimate([&](const RepOutcome& o) { return o.nodes[i].w; });
        ns.queue_length = estimate([&](const RepOutcome& o) { return o.nodes[i].q; });
        ns.response = estimate([&](const RepOutcome& o) { return o.nodes[i].t; });
        ns.utilization = estimate([&](const RepOutcome& o) { return o.nodes[i].util; });
        ns.arrival_rate = estimate([&](const RepOutcome& o) { return o.nodes[i].lambda; });
        for (const auto& o : outcomes) {
            ns.arrivals += o.nodes[i].arrivals;
            ns.departures += o.nodes[i].departures;
        }
        if (cfg.spec.class_count() > 1) {
            ns.per_class.resize(cfg.spec.class_count());
            for (std::size_t l = 0; l < cfg.spec.class_count(); ++l) {
                ClassStats& cs = ns.per_class[l];
                cs.class_id = cfg.spec.classes[l].id;
                cs.waiting = estimate([&](const RepOutcome& o) { return o.nodes[i].cls_w[l]; });
                cs.response = estimate([&](const RepOutcome& o) { return o.nodes[i].cls_t[l]; });
                for (const auto& o : outcomes) cs.departures += o.nodes[i].cls_dep[l];
            }
        }
    }
    res.chain_response = estimate([](const RepOutcome& o) { return o.chain_t; });
    double t_sum = 0.0;
    for (const auto& o : outcomes) {
        res.total_arrivals += o.ext_arrivals;
        res.total_departures += o.completions;
        t_sum += o.end_time;
    }
    res.mean_sim_time = t_sum / static_cast<double>(reps);
    return res;
}

ComparisonReport compare(const SimConfig& cfg, const ChainMetrics& analytic) {
    if (analytic.per_node.size() != cfg.spec.node_count())
        throw SpecMismatchError("analytic metrics cover " +
                                std::to_string(analytic.per_node.size()) + " nodes, config has " +
                                std::to_string(cfg.spec.node_count()));
    for (std::size_t i = 0; i < cfg.spec.node_count(); ++i)
        if (analytic.per_node[i].id != cfg.spec.nodes[i].id)
            throw SpecMismatchError("node '" + cfg.spec.nodes[i].id +
                                    "' does not match analytic node '" +
                                    analytic.per_node[i].id + "'");

    const SimResult sim = simulate(cfg);

    ComparisonReport rep;
    rep.all_pass = true;
    auto add = [&rep](const std::string& node, const char* metric, double a,
                      const Estimate& e) {
        MetricComparison mc;
        mc.node = node;
        mc.metric = metric;
        mc.analytic = a;
        mc.simulated = e.mean;
        mc.half_width = e.half_width;
        mc.rel_error = std::abs(a - e.mean) / std::max(std::abs(a), 1e-300);
        mc.pass = std::isfinite(a) && e.covers(a, 0.01 * std::abs(a));
        rep.all_pass = rep.all_pass && mc.pass;
        rep.rows.push_back(std::move(mc));
    };

    for (std::size_t i = 0; i < cfg.spec.node_count(); ++i) {
        const NodeMetrics& nm = analytic.per_node[i];
        const NodeStats& ns = sim.nodes[i];
        add(ns.id, "EW", nm.mean_waiting, ns.waiting);
        add(ns.id, "EQ", nm.mean_queue, ns.queue_length);
        add(ns.id, "ET", nm.mean_response, ns.response);
        add(ns.id, "rho", nm.utilization, ns.utilization);
    }
    add("chain", "ET", analytic.chain_response, sim.chain_response);
    return rep;
}

} // namespace qnet
