#include "bridgelab/checkpoint.hpp"

#include "bridgelab/modes.hpp"

namespace bridgelab {

namespace {

using nlohmann::json;

json dump_matrix(const MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  return a;
}

MatrixXd load_matrix(const json& a, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(a.size()) != rows * cols)
    throw ConfigError("checkpoint tensor size mismatch");
  MatrixXd m(rows, cols);
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = a[idx++].get<double>();
  return m;
}

json dump_vector(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

VectorXd load_vector(const json& a, Eigen::Index n) {
  if (static_cast<Eigen::Index>(a.size()) != n)
    throw ConfigError("checkpoint vector size mismatch");
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = a[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const DriftNet& net,
                     uint64_t seed, const nlohmann::json& meta) {
  json j;
  j["version"] = kCheckpointVersion;
  j["seed"] = seed;
  j["role"] = to_string(net.role);
  j["mode"] = to_string(net.mode);
  j["arch"] = {{"data_dim", net.cfg.data_dim},
               {"hidden", net.cfg.hidden},
               {"time_embed_dim", net.cfg.time_embed_dim},
               {"n_steps", net.cfg.n_steps},
               {"activation", "silu"}};

  json params;
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    params["w" + std::to_string(l)] = dump_matrix(net.w[l]);
    params["b" + std::to_string(l)] = dump_vector(net.b[l]);
  }
  params["embed"] = dump_matrix(net.embed);
  j["params"] = std::move(params);

  j["out_map"] = {{"scale_x", dump_vector(net.out_map.scale_x)},
                  {"scale_raw", dump_vector(net.out_map.scale_raw)}};

  json adam;
  adam["step"] = net.adam.step;
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    adam["m_w" + std::to_string(l)] = dump_matrix(net.adam.m_w[l]);
    adam["v_w" + std::to_string(l)] = dump_matrix(net.adam.v_w[l]);
    adam["m_b" + std::to_string(l)] = dump_vector(net.adam.m_b[l]);
    adam["v_b" + std::to_string(l)] = dump_vector(net.adam.v_b[l]);
  }
  adam["m_embed"] = dump_matrix(net.adam.m_embed);
  adam["v_embed"] = dump_matrix(net.adam.v_embed);
  j["adam"] = std::move(adam);

  if (!meta.is_null() && !meta.empty()) j["meta"] = meta;

  write_file_atomic(path, j.dump());
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse checkpoint " + path + ": " + e.what());
  }
  if (j.value("version", -1) != kCheckpointVersion)
    throw ConfigError("unsupported checkpoint version in " + path);

  // Missing keys or wrong value types are file problems, not internal bugs.
  try {
    LoadedCheckpoint out;
    out.seed = j.at("seed").get<uint64_t>();
    if (j.contains("meta")) out.meta = j["meta"];

    NetConfig cfg;
    const auto& arch = j.at("arch");
    cfg.data_dim = arch.at("data_dim").get<int>();
    cfg.hidden = arch.at("hidden").get<std::vector<int>>();
    cfg.time_embed_dim = arch.at("time_embed_dim").get<int>();
    cfg.n_steps = arch.at("n_steps").get<int>();

    DriftNet net = make_drift_net(cfg, 0);
    net.role = direction_from_string(j.at("role").get<std::string>());
    net.mode = mode_from_string(j.at("mode").get<std::string>());

    const auto& params = j.at("params");
    for (std::size_t l = 0; l < net.w.size(); ++l) {
      net.w[l] = load_matrix(params.at("w" + std::to_string(l)),
                             net.w[l].rows(), net.w[l].cols());
      net.b[l] =
          load_vector(params.at("b" + std::to_string(l)), net.b[l].size());
    }
    net.embed =
        load_matrix(params.at("embed"), net.embed.rows(), net.embed.cols());

    const auto& om = j.at("out_map");
    net.out_map.scale_x = load_vector(om.at("scale_x"), cfg.n_steps + 1);
    net.out_map.scale_raw = load_vector(om.at("scale_raw"), cfg.n_steps + 1);

    const auto& adam = j.at("adam");
    net.adam.step = adam.at("step").get<int64_t>();
    for (std::size_t l = 0; l < net.w.size(); ++l) {
      net.adam.m_w[l] = load_matrix(adam.at("m_w" + std::to_string(l)),
                                    net.w[l].rows(), net.w[l].cols());
      net.adam.v_w[l] = load_matrix(adam.at("v_w" + std::to_string(l)),
                                    net.w[l].rows(), net.w[l].cols());
      net.adam.m_b[l] =
          load_vector(adam.at("m_b" + std::to_string(l)), net.b[l].size());
      net.adam.v_b[l] =
          load_vector(adam.at("v_b" + std::to_string(l)), net.b[l].size());
    }
    net.adam.m_embed =
        load_matrix(adam.at("m_embed"), net.embed.rows(), net.embed.cols());
    net.adam.v_embed =
        load_matrix(adam.at("v_embed"), net.embed.rows(), net.embed.cols());

    out.net = std::move(net);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed checkpoint " + path + ": " + e.what());
  }
}

}  // namespace bridgelab
