#include "ph3/remote.hpp"

#include <json.hpp>

// httplib pulls in a lot; keep it out of the public headers.
#include <httplib.h>

namespace ph3 {

namespace {

std::pair<std::string, int> split_url(const std::string& url) {
  // accepts host:port or http://host:port
  std::string rest = url;
  if (rest.rfind("http://", 0) == 0) rest = rest.substr(7);
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos)
    throw ValidationError("remote url needs host:port, got '" + url + "'");
  return {rest.substr(0, colon), std::stoi(rest.substr(colon + 1))};
}

}  // namespace

struct RemoteBackend::Impl {
  std::string host;
  int port;

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const {
    httplib::Client client(host, port);
    client.set_read_timeout(600, 0);
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res)
      throw RemoteUnavailable("no response from " + host + ":" +
                              std::to_string(port) + path);
    if (res->status != 200)
      throw RemoteUnavailable(path + " returned status " +
                              std::to_string(res->status) + ": " + res->body);
    return nlohmann::json::parse(res->body);
  }

  nlohmann::json get(const std::string& path) const {
    httplib::Client client(host, port);
    auto res = client.Get(path);
    if (!res)
      throw RemoteUnavailable("no response from " + host + ":" +
                              std::to_string(port) + path);
    if (res->status != 200)
      throw RemoteUnavailable(path + " returned status " +
                              std::to_string(res->status));
    return nlohmann::json::parse(res->body);
  }
};

RemoteBackend::RemoteBackend(std::string base_url)
    : impl_(std::make_unique<Impl>()), base_url_(std::move(base_url)) {
  auto [host, port] = split_url(base_url_);
  impl_->host = host;
  impl_->port = port;

  const auto v = impl_->get("/vocab");
  vocab_.size = v.at("size").get<std::size_t>();
  vocab_.placeholder_id = v.at("placeholder_id").get<TokenId>();
  vocab_.surfaces = v.at("surfaces").get<std::vector<std::string>>();
  vocab_.validate();
  max_len_ = v.value("max_len", std::size_t{4096});
  if (v.contains("layers") && v.contains("hidden"))
    shape_ = FlopsShape{v["layers"].get<std::size_t>(),
                        v["hidden"].get<std::size_t>(), vocab_.size};
}

RemoteBackend::~RemoteBackend() = default;

PrefixDistributionMatrix RemoteBackend::forward_full(
    std::span<const TokenId> tokens) const {
  check_input(tokens);
  // trailing placeholders travel as a count, not as ids
  std::size_t keep = tokens.size();
  while (keep > 0 && tokens[keep - 1] == vocab_.placeholder_id) --keep;
  nlohmann::json body;
  body["tokens"] = std::vector<TokenId>(tokens.begin(), tokens.begin() + keep);
  body["append_placeholders"] = tokens.size() - keep;
  const auto reply = impl_->post("/forward_full", body);

  const auto& rows = reply.at("rows");
  if (rows.size() != tokens.size())
    throw RemoteUnavailable("server returned " + std::to_string(rows.size()) +
                            " rows for " + std::to_string(tokens.size()) + " tokens");
  PrefixDistributionMatrix out;
  out.rows.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(vocab_.size));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != vocab_.size)
      throw RemoteUnavailable("row width != vocab size");
    for (std::size_t j = 0; j < vocab_.size; ++j)
      out.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j].get<double>();
  }
  return out;
}

Eigen::RowVectorXd RemoteBackend::empty_prefix_distribution() const {
  throw RemoteUnavailable(
      "the remote protocol has no empty-prefix request; score a non-empty input");
}

std::vector<TokenId> RemoteBackend::tokenize(std::string_view text) const {
  nlohmann::json body;
  body["text"] = std::string(text);
  return impl_->post("/tokenize", body).at("tokens").get<std::vector<TokenId>>();
}

std::string RemoteBackend::fingerprint() const {
  return "remote(" + base_url_ + ")";
}

struct BackendServer::Impl {
  httplib::Server server;
};

BackendServer::BackendServer(const Backend& backend, std::string host, int port)
    : impl_(std::make_unique<Impl>()),
      backend_(backend),
      host_(std::move(host)),
      port_(port) {
  auto& srv = impl_->server;

  srv.Get("/vocab", [this](const httplib::Request&, httplib::Response& res) {
    const auto& v = backend_.vocab();
    nlohmann::json j;
    j["size"] = v.size;
    j["placeholder_id"] = v.placeholder_id;
    j["surfaces"] = v.surfaces;
    j["max_len"] = backend_.max_len();
    if (const auto shape = backend_.flops_shape()) {
      j["layers"] = shape->layers;
      j["hidden"] = shape->hidden;
    }
    res.set_content(j.dump(), "application/json");
  });

  srv.Post("/tokenize", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json j;
      j["tokens"] = backend_.tokenize(body.at("text").get<std::string>());
      res.set_content(j.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
    }
  });

  srv.Post("/forward_full", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto body = nlohmann::json::parse(req.body);
      auto tokens = body.at("tokens").get<std::vector<TokenId>>();
      const auto m = body.value("append_placeholders", std::size_t{0});
      tokens.insert(tokens.end(), m, backend_.vocab().placeholder_id);
      const auto matrix = backend_.forward_full(tokens);
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index i = 0; i < matrix.rows.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < matrix.rows.cols(); ++j)
          row.push_back(matrix.rows(i, j));
        rows.push_back(std::move(row));
      }
      nlohmann::json j;
      j["rows"] = std::move(rows);
      res.set_content(j.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
    }
  });
}

BackendServer::~BackendServer() { stop(); }

void BackendServer::start() {
  thread_ = std::thread([this] { impl_->server.listen(host_, port_); });
  impl_->server.wait_until_ready();
}

void BackendServer::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

void BackendServer::run() { impl_->server.listen(host_, port_); }

}  // namespace ph3
