#include "lcval/service.hpp"

#include <chrono>
#include <ctime>
#include <map>

#include <httplib.h>
#include <json.hpp>

#include "lcval/error.hpp"

namespace lcval {

namespace {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
    case ErrorCode::kInvalidArgument:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kDuplicate:
    case ErrorCode::kAlreadyFinalized:
    case ErrorCode::kNotReviewable:
      return 409;
    case ErrorCode::kOutOfExtent:
    case ErrorCode::kUnfinalized:
      return 422;
    default:
      return 500;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, http_status(code),
            {{"error", {{"code", std::string(error_code_name(code))}, {"message", message}}}});
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json record_json(const AnnotationRecord& r) {
  return {{"expert_id", r.expert_id},
          {"label", std::string(to_string(r.label))},
          {"confidence", level_number(r.confidence)},
          {"round", r.round},
          {"timestamp", r.timestamp}};
}

json status_json(const SampleStatus& s, const SamplePoint* point) {
  json annotations = json::array();
  for (const auto& r : s.round1) annotations.push_back(record_json(r));
  if (s.round2) annotations.push_back(record_json(*s.round2));
  json doc{{"sample_id", s.sample_id},
           {"state", std::string(to_string(s.state))},
           {"annotations", annotations}};
  if (point) {
    doc["x"] = point->x;
    doc["y"] = point->y;
    doc["stratum_id"] = point->stratum_id;
  }
  if (s.final) {
    doc["final"] = {{"label", std::string(to_string(s.final->label))},
                    {"confidence", level_number(s.final->confidence)},
                    {"provenance", std::string(to_string(s.final->provenance))}};
  }
  return doc;
}

json patch_json(const ContextPatch& patch) {
  json windows = json::array();
  for (const auto& w : patch.windows) {
    json rows = json::array();
    for (int r = 0; r < w.side; ++r) {
      json row = json::array();
      for (int c = 0; c < w.side; ++c) row.push_back(w.values[static_cast<std::size_t>(r * w.side + c)]);
      rows.push_back(row);
    }
    json legend = json::array();
    for (const auto& e : w.legend) {
      legend.push_back({{"code", e.code},
                        {"label", e.label},
                        {"class", std::string(to_string(e.general))}});
    }
    windows.push_back({{"product", w.product},
                       {"cell_size", w.cell_size},
                       {"side", w.side},
                       {"nodata", w.nodata},
                       {"in_extent", w.in_extent},
                       {"center", {{"row", w.center.row}, {"col", w.center.col}}},
                       {"values", rows},
                       {"legend", legend}});
  }
  return {{"sample_id", patch.sample_id}, {"windows", windows}};
}

// Parses the request body; failures surface as kParse.
json parse_body(const httplib::Request& req) {
  try {
    auto doc = json::parse(req.body);
    if (!doc.is_object()) throw Error(ErrorCode::kParse, "request body must be a JSON object");
    return doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed JSON body: ") + e.what());
  }
}

template <typename T>
T field(const json& doc, const char* name) {
  if (!doc.contains(name)) {
    throw Error(ErrorCode::kInvalidArgument, std::string("missing field '") + name + "'");
  }
  try {
    return doc.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("field '") + name + "' has the wrong type");
  }
}

}  // namespace

struct AnnotationServer::Impl {
  ConcurrentAnnotationStore& store;
  std::map<std::int64_t, SamplePoint> samples;
  std::vector<ProductRef> products;
  ExtentPolicy policy;
  httplib::Server server;

  Impl(ConcurrentAnnotationStore& s, std::vector<SamplePoint> points,
       std::vector<ProductRef> prods, ExtentPolicy pol)
      : store(s), products(std::move(prods)), policy(pol) {
    for (auto& p : points) samples.emplace(p.sample_id, std::move(p));
    routes();
  }

  template <typename Handler>
  auto guarded(Handler handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const std::exception& e) {
        send_error(res, ErrorCode::kInvalidArgument, e.what());
      }
    };
  }

  void routes() {
    server.Get("/api/samples", guarded([this](const auto& req, auto& res) {
      std::optional<WorkflowState> filter;
      if (req.has_param("status") && !req.get_param_value("status").empty()) {
        const auto name = req.get_param_value("status");
        filter = try_parse_workflow_state(name);
        if (!filter) {
          throw Error(ErrorCode::kInvalidArgument, "unknown status '" + name + "'");
        }
      }
      json body = store.read([&](const AnnotationStore& s) {
        json list = json::array();
        for (const auto& st : s.samples(filter)) {
          auto it = samples.find(st.sample_id);
          list.push_back(status_json(st, it == samples.end() ? nullptr : &it->second));
        }
        std::map<std::string, std::size_t> counts;
        for (const auto& st : s.samples()) ++counts[std::string(to_string(st.state))];
        return json{{"samples", list},
                    {"count", list.size()},
                    {"total", s.sample_count()},
                    {"state_counts", counts},
                    {"experts", s.experts()}};
      });
      send_json(res, 200, body);
    }));

    server.Get(R"(/api/samples/(-?\d+)/patch)", guarded([this](const auto& req, auto& res) {
      const std::int64_t id = std::stoll(req.matches[1].str());
      auto it = samples.find(id);
      if (it == samples.end()) {
        throw Error(ErrorCode::kNotFound, "unknown sample " + std::to_string(id));
      }
      send_json(res, 200, patch_json(extract_patch(products, it->second, policy)));
    }));

    server.Post("/api/annotations", guarded([this](const auto& req, auto& res) {
      const json doc = parse_body(req);
      AnnotationRecord r;
      r.sample_id = field<std::int64_t>(doc, "sample_id");
      r.expert_id = field<std::string>(doc, "expert_id");
      r.label = parse_general_class(field<std::string>(doc, "label"));
      r.confidence = confidence_from_number(field<std::int64_t>(doc, "confidence"));
      r.round = doc.value("round", 1);
      if (r.round != 1) {
        throw Error(ErrorCode::kInvalidArgument, "use /api/consensus for round-2 records");
      }
      r.timestamp = doc.value("timestamp", utc_now());
      store.record_annotation(r);
      const auto state =
          store.read([&](const AnnotationStore& s) { return s.state(r.sample_id); });
      send_json(res, 201, {{"sample_id", r.sample_id}, {"state", std::string(to_string(state))}});
    }));

    server.Get("/api/review", guarded([this](const auto&, auto& res) {
      json body = store.read([&](const AnnotationStore& s) {
        json queue = json::array();
        for (std::int64_t id : s.review_queue()) {
          auto it = samples.find(id);
          queue.push_back(status_json(s.status(id), it == samples.end() ? nullptr : &it->second));
        }
        return json{{"queue", queue}, {"count", queue.size()}};
      });
      send_json(res, 200, body);
    }));

    server.Post("/api/consensus", guarded([this](const auto& req, auto& res) {
      const json doc = parse_body(req);
      const auto id = field<std::int64_t>(doc, "sample_id");
      const auto label = parse_general_class(field<std::string>(doc, "label"));
      const auto confidence = confidence_from_number(field<std::int64_t>(doc, "confidence"));
      store.record_consensus(id, label, confidence, doc.value("timestamp", utc_now()));
      const auto state = store.read([&](const AnnotationStore& s) { return s.state(id); });
      send_json(res, 201, {{"sample_id", id}, {"state", std::string(to_string(state))}});
    }));
  }
};

AnnotationServer::AnnotationServer(ConcurrentAnnotationStore& store,
                                   std::vector<SamplePoint> samples,
                                   std::vector<ProductRef> products, ExtentPolicy policy)
    : impl_(std::make_unique<Impl>(store, std::move(samples), std::move(products), policy)) {}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void AnnotationServer::listen() { impl_->server.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_) impl_->server.stop();
}

void AnnotationServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace lcval
