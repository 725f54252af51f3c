/*
 * Copyright 2026 The simct Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file system.hpp
 * @brief Wires host ports, links, quadrant switches and vaults together.
 *
 * Request path:
 *
 *   port.tx -> link channel -> req switch (home quadrant)
 *           [-> req switch (vault quadrant)] -> vault input queue
 *
 * Response path:
 *
 *   vault response buffer -> resp switch (vault quadrant)
 *           [-> resp switch (home quadrant)] -> link channel -> host
 *
 * With bank credits enabled the link request channels hold one credit per
 * bank queue slot of every vault; the credit comes back when the request
 * leaves the bank queue for service.
 *
 * The host return latency (SerDes and host controller, both directions) is
 * charged as one fixed delay between the link and the port.
 */

#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "simct/addressing.hpp"
#include "simct/fabric.hpp"
#include "simct/hostgen.hpp"
#include "simct/interconnect.hpp"
#include "simct/memdev.hpp"

namespace simct {

struct NocConfig {
  sim::SimTime flit_ps = 1200;
  sim::SimTime hop_latency_ps = 2'000;
  unsigned switch_buffer_depth = 4;
  /// One input queue per output at every switch input instead of a single
  /// shared FIFO.
  bool virtual_output_queues = true;
  net::Arbitration arbitration = net::Arbitration::OldestFirst;

  void check() const {
    if (flit_ps == 0) throw ValidationError("internal flit period must be positive");
    if (switch_buffer_depth == 0) throw ValidationError("switch buffer depth must be positive");
  }
};

struct HostConfig {
  sim::SimTime tx_latency_ps = 273'500;
  sim::SimTime rx_latency_ps = 273'500;
  unsigned tx_fifo_depth = 2;
  sim::SimTime link_latency_ps = 0;
  /// When set, the host holds one credit per bank queue slot and a request
  /// leaves the link only with a credit for its target bank.
  bool bank_credits = false;

  sim::SimTime round_trip_ps() const { return tx_latency_ps + rx_latency_ps; }
};

struct DeviceConfig {
  net::LinkConfig link;
  NocConfig noc;
  mem::DramTiming dram;
  mem::VaultConfig vault;
  addr::AddressMapConfig map;
  HostConfig host;

  void check() const {
    link.check();
    noc.check();
    dram.check();
    vault.check();
    map.check();
  }
};

/// Fixed part of a read's round trip with no contention, split into the
/// host/link constant and the device share. All values in ns.
struct NoLoadBreakdown {
  double host_ns = 0.0;
  double device_ns = 0.0;
  double dram_ns = 0.0;  ///< timing sum plus data beats
  double total() const { return host_ns + device_ns; }
};

inline NoLoadBreakdown no_load_latency(const DeviceConfig& cfg, unsigned link, unsigned vault, unsigned bytes) {
  cfg.check();
  const auto req = protocol::make_read_request(0, 0, bytes);
  const auto resp = protocol::make_response(req);
  const auto link_rate = net::FlitRate::of_link(cfg.link);
  const auto noc_rate = net::FlitRate::of_period(cfg.noc.flit_ps);
  const unsigned hops = net::hop_count(link, cfg.link.links, vault);
  const unsigned beats = mem::beats_for(bytes, cfg.vault);
  auto ceil_ps = [](double ps) { return std::ceil(ps - 1e-9); };

  NoLoadBreakdown b;
  b.host_ns = sim::to_ns(cfg.host.round_trip_ps());
  b.dram_ns = cfg.dram.sum_ns() + sim::to_ns(beats * cfg.vault.bus_beat_ps);
  double ps = 0.0;
  ps += ceil_ps(net::serialize_ps(req, link_rate)) + cfg.host.link_latency_ps;
  ps += hops * (net::serialize_ps(req, noc_rate) + cfg.noc.hop_latency_ps);
  ps += 2.0 * cfg.vault.controller_latency_ps + cfg.vault.passthrough_ps;
  ps += b.dram_ns * 1000.0;
  // The home response switch feeds the link directly, so one hop fewer.
  ps += (hops - 1) * (net::serialize_ps(resp, noc_rate) + cfg.noc.hop_latency_ps);
  ps += ceil_ps(net::serialize_ps(resp, link_rate)) + cfg.host.link_latency_ps;
  b.device_ns = ps / 1000.0;
  return b;
}

/// A probe with a label, for Little's-law reporting.
struct NamedProbe {
  std::string name;
  const stats::QueueProbe* probe;
};

class System {
 public:
  System(const DeviceConfig& cfg, std::vector<host::PortConfig> ports, std::uint64_t seed) : cfg_(cfg) {
    cfg.check();
    if (ports.size() > 9) throw ConfigError("at most nine ports");
    build(std::move(ports), seed);
  }
  System(const System&) = delete;
  System& operator=(const System&) = delete;

  sim::Engine& engine() { return ctx_.engine; }
  const DeviceConfig& config() const { return cfg_; }

  /// Sets the measurement window on every component and resets probes at
  /// its start. Call before run.
  void set_window(const fabric::Window& w) {
    window_ = w;
    for (auto& p : ports_) p->set_window(w);
    for (auto& v : vaults_) v->set_window(w);
    for (auto& c : channels_) c->set_window(w);
    if (w.begin > 0) {
      ctx_.engine.schedule(w.begin, reset_node_->id(), fabric::kWake);
    }
  }

  /// Starts the ports and runs until `limit` (events at limit included).
  void run_until(sim::SimTime limit) {
    start_ports();
    ctx_.engine.run_until(limit);
    close_probes(ctx_.engine.now());
  }

  /// Starts the ports and runs until every issued request has completed.
  void run_to_completion() {
    start_ports();
    ctx_.engine.run();
    close_probes(ctx_.engine.now());
  }

  const std::vector<std::unique_ptr<host::Port>>& ports() const { return ports_; }
  const std::vector<std::unique_ptr<mem::Vault>>& vaults() const { return vaults_; }
  const std::vector<net::Channel*>& link_request_channels() const { return link_req_; }
  const std::vector<net::Channel*>& link_response_channels() const { return link_resp_; }
  const fabric::Window& window() const { return window_; }
  const net::CreditPool& credits() const { return credits_; }

  /// Every instrumented queue.
  std::vector<NamedProbe> probes() const {
    std::vector<NamedProbe> out;
    for (const auto& p : ports_) {
      out.push_back({p->tx().name(), &p->tx().probe()});
      out.push_back({"port" + std::to_string(p->config().id) + ".inflight", &p->in_flight_probe()});
    }
    for (const auto& b : buffers_) out.push_back({b->name(), &b->probe()});
    for (const auto& v : vaults_) {
      out.push_back({v->input().name(), &v->input().probe()});
      out.push_back({"vault" + std::to_string(v->index()) + ".banks", &v->bank_probe()});
    }
    return out;
  }

 private:
  /// Resets queue probes at the start of the measurement window.
  class ProbeReset final : public fabric::Node {
   public:
    ProbeReset(fabric::Context& ctx, System& sys) : Node(ctx, "window"), sys_(sys) {}

   protected:
    void work() override { sys_.reset_probes(now()); }

   private:
    System& sys_;
  };

  void reset_probes(sim::SimTime t) {
    for (auto& p : ports_) {
      p->tx().probe().reset(t);
      p->in_flight_probe().reset(t);
    }
    for (auto& b : buffers_) b->probe().reset(t);
    for (auto& v : vaults_) {
      v->input().probe().reset(t);
      v->bank_probe().reset(t);
    }
  }

  void close_probes(sim::SimTime t) {
    for (auto& p : ports_) {
      p->tx().probe().close(t);
      p->in_flight_probe().close(t);
    }
    for (auto& b : buffers_) b->probe().close(t);
    for (auto& v : vaults_) {
      v->input().probe().close(t);
      v->bank_probe().close(t);
    }
  }

  void start_ports() {
    if (started_) return;
    started_ = true;
    for (auto& p : ports_) p->start();
  }

  fabric::Buffer* make_buffer(const std::string& name, unsigned depth) {
    buffers_.push_back(std::make_unique<fabric::Buffer>(name, depth));
    return buffers_.back().get();
  }

  net::Channel* make_channel(const std::string& name, net::FlitRate rate, sim::SimTime latency) {
    channels_.push_back(std::make_unique<net::Channel>(ctx_, name, rate, latency));
    channels_.back()->set_arbitration(cfg_.noc.arbitration);
    return channels_.back().get();
  }

  /// Gives `upstream` its buffer(s) at a switch input. Shared mode: one FIFO
  /// feeding every output. Virtual output queues: one FIFO per output, and
  /// the upstream channel delivers each packet straight into the queue for
  /// its next hop.
  void attach_switch_input(net::Channel* upstream, const std::string& name, const std::vector<net::Channel*>& outputs,
                           std::function<net::Channel*(fabric::TxnId)> next) {
    const unsigned depth = cfg_.noc.switch_buffer_depth;
    if (!cfg_.noc.virtual_output_queues) {
      auto* b = make_buffer(name, depth);
      b->set_route([next](fabric::TxnId id) -> fabric::Node* { return next(id); });
      upstream->set_destination(b);
      for (auto* out : outputs) out->add_input(b);
      return;
    }
    std::vector<std::pair<net::Channel*, fabric::Buffer*>> voq;
    for (auto* out : outputs) {
      auto* b = make_buffer(name + ">" + out->name(), depth);
      b->set_route([out](fabric::TxnId) -> fabric::Node* { return out; });
      out->add_input(b);
      upstream->add_destination(b);
      voq.emplace_back(out, b);
    }
    upstream->set_destination_picker([voq, next](fabric::TxnId id) -> fabric::Buffer* {
      net::Channel* out = next(id);
      for (const auto& [ch, b] : voq) {
        if (ch == out) return b;
      }
      throw ModelError("no queue for the next hop");
    });
  }

  void build(std::vector<host::PortConfig> port_cfgs, std::uint64_t seed) {
    const unsigned L = cfg_.link.links;
    const unsigned Q = addr::kQuadrants;
    const auto link_rate = net::FlitRate::of_link(cfg_.link);
    const auto noc_rate = net::FlitRate::of_period(cfg_.noc.flit_ps);
    const auto hop = cfg_.noc.hop_latency_ps;

    reset_node_ = std::make_unique<ProbeReset>(ctx_, *this);

    for (unsigned v = 0; v < addr::kVaults; ++v) {
      vaults_.push_back(std::make_unique<mem::Vault>(ctx_, v, cfg_.dram, cfg_.vault, cfg_.map));
    }

    // Request side. to_vault[q][k]: switch q -> its k-th local vault.
    // req_cross[q][r]: switch q -> switch r.
    std::vector<std::vector<net::Channel*>> to_vault(Q), req_cross(Q, std::vector<net::Channel*>(Q, nullptr));
    for (unsigned q = 0; q < Q; ++q) {
      for (unsigned k = 0; k < addr::kVaultsPerQuadrant; ++k) {
        const unsigned v = q * addr::kVaultsPerQuadrant + k;
        auto* ch = make_channel("rq" + std::to_string(q) + ">v" + std::to_string(v), noc_rate, hop);
        ch->set_destination(&vaults_[v]->input());
        to_vault[q].push_back(ch);
      }
      for (unsigned r = 0; r < Q; ++r) {
        if (r == q) continue;
        req_cross[q][r] = make_channel("rq" + std::to_string(q) + ">rq" + std::to_string(r), noc_rate, hop);
      }
    }
    auto req_next = [this, to_vault, req_cross](unsigned q, fabric::TxnId id) -> net::Channel* {
      const auto d = addr::decode(ctx_.pool[id].request.address, cfg_.map);
      ctx_.pool[id].vault = static_cast<std::uint8_t>(d.vault);
      const unsigned vq = addr::quadrant_of(d.vault);
      if (vq == q) return to_vault[q][d.vault % addr::kVaultsPerQuadrant];
      return req_cross[q][vq];
    };
    std::vector<std::vector<net::Channel*>> req_outputs(Q);
    for (unsigned q = 0; q < Q; ++q) {
      req_outputs[q] = to_vault[q];
      for (unsigned r = 0; r < Q; ++r) {
        if (r != q) req_outputs[q].push_back(req_cross[q][r]);
      }
    }
    for (unsigned q = 0; q < Q; ++q) {
      for (unsigned r = 0; r < Q; ++r) {
        if (r == q) continue;
        attach_switch_input(req_cross[q][r], "rq" + std::to_string(r) + ".from_rq" + std::to_string(q), req_outputs[r],
                            [req_next, r](fabric::TxnId id) { return req_next(r, id); });
      }
    }
    for (unsigned l = 0; l < L; ++l) {
      const unsigned q = net::home_quadrant(l, L);
      auto* ch = make_channel("link" + std::to_string(l) + ".req", link_rate, cfg_.host.link_latency_ps);
      attach_switch_input(ch, "rq" + std::to_string(q) + ".from_link" + std::to_string(l), req_outputs[q],
                          [req_next, q](fabric::TxnId id) { return req_next(q, id); });
      link_req_.push_back(ch);
    }

    // Response side. resp_cross[q][r]: switch q -> switch r.
    std::vector<std::vector<net::Channel*>> resp_cross(Q, std::vector<net::Channel*>(Q, nullptr));
    for (unsigned q = 0; q < Q; ++q) {
      for (unsigned r = 0; r < Q; ++r) {
        if (r == q) continue;
        resp_cross[q][r] = make_channel("rs" + std::to_string(q) + ">rs" + std::to_string(r), noc_rate, hop);
      }
    }
    for (unsigned l = 0; l < L; ++l) {
      auto* ch = make_channel("link" + std::to_string(l) + ".resp", link_rate, cfg_.host.link_latency_ps);
      link_resp_.push_back(ch);
    }
    auto resp_next = [this, resp_cross](unsigned q, fabric::TxnId id) -> net::Channel* {
      const unsigned l = ctx_.pool[id].link;
      const unsigned hq = net::home_quadrant(l, cfg_.link.links);
      if (hq == q) return link_resp_[l];
      return resp_cross[q][hq];
    };
    std::vector<std::vector<net::Channel*>> resp_outputs(Q);
    for (unsigned q = 0; q < Q; ++q) {
      for (unsigned r = 0; r < Q; ++r) {
        if (r != q) resp_outputs[q].push_back(resp_cross[q][r]);
      }
      for (unsigned l = 0; l < L; ++l) {
        if (net::home_quadrant(l, L) == q) resp_outputs[q].push_back(link_resp_[l]);
      }
    }
    for (unsigned v = 0; v < addr::kVaults; ++v) {
      const unsigned q = addr::quadrant_of(v);
      auto* b = make_buffer("v" + std::to_string(v) + ".resp", cfg_.vault.response_queue_depth);
      b->set_route([resp_next, q](fabric::TxnId id) -> fabric::Node* { return resp_next(q, id); });
      vaults_[v]->set_response_buffer(b);
      for (auto* out : resp_outputs[q]) out->add_input(b);
    }
    for (unsigned q = 0; q < Q; ++q) {
      for (unsigned r = 0; r < Q; ++r) {
        if (r == q) continue;
        attach_switch_input(resp_cross[q][r], "rs" + std::to_string(r) + ".from_rs" + std::to_string(q),
                            resp_outputs[r], [resp_next, r](fabric::TxnId id) { return resp_next(r, id); });
      }
    }

    // Host ports.
    host::Prng seeder(seed);
    for (auto& pc : port_cfgs) {
      const unsigned l = pc.id % L;
      const std::uint64_t port_seed = seeder.next();
      ports_.push_back(std::make_unique<host::Port>(ctx_, std::move(pc), port_seed, l, cfg_.host.tx_fifo_depth));
      host::Port* port = ports_.back().get();
      link_req_[l]->add_input(&port->tx());
      port->tx().set_route([this, l](fabric::TxnId) -> fabric::Node* { return link_req_[l]; });
    }
    if (cfg_.host.bank_credits) {
      credits_ = net::CreditPool(addr::kVaults * addr::kBanksPerVault, cfg_.vault.bank_queue_depth);
      auto dest = [this](fabric::TxnId id) {
        const auto d = addr::decode(ctx_.pool[id].request.address, cfg_.map);
        return static_cast<std::size_t>(d.vault * addr::kBanksPerVault + d.bank);
      };
      for (auto* ch : link_req_) {
        ch->set_gate([this, dest](fabric::TxnId id) { return credits_.available(dest(id)) > 0; },
                     [this, dest](fabric::TxnId id) { credits_.acquire(dest(id)); }, cfg_.host.tx_fifo_depth);
      }
      for (auto& v : vaults_) {
        v->on_bank_dequeue([this, dest](fabric::TxnId id) {
          credits_.release(dest(id));
          // Rotate who hears about the credit first so no link starves.
          const std::size_t n = link_req_.size();
          for (std::size_t k = 0; k < n; ++k) link_req_[(credit_turn_ + k) % n]->kick();
          credit_turn_ = (credit_turn_ + 1) % n;
        });
      }
    }
    std::vector<host::Port*> by_id(9, nullptr);
    for (auto& p : ports_) {
      if (by_id[p->config().id] != nullptr) throw ConfigError("duplicate port id");
      by_id[p->config().id] = p.get();
    }
    for (unsigned l = 0; l < L; ++l) {
      link_resp_[l]->set_sink([this, by_id](fabric::TxnId id) {
        const auto& x = ctx_.pool[id];
        by_id[x.port]->complete_at(ctx_.engine.now() + cfg_.host.round_trip_ps(), id);
      });
    }
  }

  DeviceConfig cfg_;
  fabric::Context ctx_;
  std::unique_ptr<ProbeReset> reset_node_;
  std::vector<std::unique_ptr<mem::Vault>> vaults_;
  std::vector<std::unique_ptr<net::Channel>> channels_;
  std::vector<std::unique_ptr<fabric::Buffer>> buffers_;
  std::vector<std::unique_ptr<host::Port>> ports_;
  std::vector<net::Channel*> link_req_;
  std::vector<net::Channel*> link_resp_;
  net::CreditPool credits_;
  std::size_t credit_turn_ = 0;
  fabric::Window window_;
  bool started_ = false;
};

}  // namespace simct
