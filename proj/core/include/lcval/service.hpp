#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lcval/annotation.hpp"
#include "lcval/retrieval.hpp"
#include "lcval/sampling.hpp"

namespace lcval {

// JSON-over-HTTP front end of the annotation store:
//
//   GET  /api/samples?status=<state>  samples with workflow state
//   GET  /api/samples/{id}/patch      context patch per product
//   POST /api/annotations             one round-1 record
//   GET  /api/review                  review queue
//   POST /api/consensus               one consensus record
//
// Errors answer with {"error": {"code": ..., "message": ...}}.
class AnnotationServer {
 public:
  AnnotationServer(ConcurrentAnnotationStore& store, std::vector<SamplePoint> samples,
                   std::vector<ProductRef> products,
                   ExtentPolicy policy = ExtentPolicy::kUnclassified);
  ~AnnotationServer();

  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop(). Requires a prior bind().
  void listen();
  void stop();
  // Blocks until the server accepts connections.
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lcval
