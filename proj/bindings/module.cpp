#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "combcast/beamforming.hpp"
#include "combcast/channel.hpp"
#include "combcast/sim.hpp"
#include "combcast/threshold.hpp"
#include "combcast/traffic.hpp"

namespace py = pybind11;

using namespace combcast;
namespace bf = combcast::beamforming;

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Max-min beamforming for cooperating base stations, Monte Carlo "
      "spectral-efficiency estimation, and popularity-threshold analysis "
      "for mixed broadcast/unicast delivery.";

  py::register_exception<sim::ConfigError>(m, "ConfigError",
                                           PyExc_ValueError);
  py::register_exception<sim::SolverBudgetError>(m, "SolverBudgetError",
                                                 PyExc_RuntimeError);

  py::class_<ZipfModel>(m, "ZipfModel",
                        "Popularity law f(rank) = rank^-alpha over a finite "
                        "catalog.")
      .def(py::init<double, int>(), py::arg("alpha"), py::arg("catalog_size"))
      .def_property_readonly("alpha", &ZipfModel::alpha)
      .def_property_readonly("catalog_size", &ZipfModel::catalog_size)
      .def("popularity", &ZipfModel::popularity, py::arg("rank"))
      .def("normalized_popularity", &ZipfModel::normalized_popularity,
           py::arg("rank"))
      .def("normalization", &ZipfModel::normalization);

  m.def("zipf_normalization", &zipf_normalization, py::arg("alpha"),
        py::arg("catalog_size"),
        "Direct sum of rank^-alpha over the catalog.");

  py::class_<DemandProfile>(m, "DemandProfile")
      .def_readonly("expected_requests", &DemandProfile::expected_requests)
      .def_readonly("subscribers", &DemandProfile::subscribers)
      .def_readonly("file_size_bits", &DemandProfile::file_size_bits);

  m.def("make_demand_profile", &make_demand_profile, py::arg("model"),
        py::arg("subscribers"), py::arg("file_size_bits"),
        "Expected per-rank request counts when each subscriber asks for one "
        "file.");
  m.def("volume_broadcast", &volume_broadcast, py::arg("model"),
        py::arg("threshold"), py::arg("file_size_bits"));
  m.def("volume_unicast", &volume_unicast, py::arg("model"),
        py::arg("threshold"), py::arg("file_size_bits"),
        py::arg("subscribers"));

  py::class_<CostParams>(m, "CostParams",
                         "Inputs of the delivery-time cost: subscriber "
                         "count, file size, bandwidth, the two spectral "
                         "efficiencies, and the popularity model.")
      .def(py::init([](int subscribers, double file_size_bits,
                       double bandwidth_hz, double spf_unicast,
                       double spf_broadcast, const ZipfModel& zipf) {
             return CostParams{subscribers, file_size_bits, bandwidth_hz,
                               spf_unicast, spf_broadcast, zipf};
           }),
           py::arg("subscribers"), py::arg("file_size_bits"),
           py::arg("bandwidth_hz"), py::arg("spf_unicast"),
           py::arg("spf_broadcast"), py::arg("zipf"))
      .def_readwrite("subscribers", &CostParams::subscribers)
      .def_readwrite("file_size_bits", &CostParams::file_size_bits)
      .def_readwrite("bandwidth_hz", &CostParams::bandwidth_hz)
      .def_readwrite("spf_unicast", &CostParams::spf_unicast)
      .def_readwrite("spf_broadcast", &CostParams::spf_broadcast)
      .def_readwrite("zipf", &CostParams::zipf)
      .def("validate", &CostParams::validate);

  py::class_<ThresholdReport>(m, "ThresholdReport")
      .def_readonly("total_time", &ThresholdReport::total_time)
      .def_readonly("best_threshold", &ThresholdReport::best_threshold)
      .def_readonly("sign_change_threshold",
                    &ThresholdReport::sign_change_threshold)
      .def_readonly("methods_agree", &ThresholdReport::methods_agree)
      .def_readonly("time_at_best", &ThresholdReport::time_at_best)
      .def_readonly("improvement_vs_unicast",
                    &ThresholdReport::improvement_vs_unicast)
      .def_readonly("improvement_vs_broadcast",
                    &ThresholdReport::improvement_vs_broadcast)
      .def_readonly("closed_form", &ThresholdReport::closed_form)
      .def_readonly("closed_form_rounded",
                    &ThresholdReport::closed_form_rounded);

  m.def("total_time", &total_time, py::arg("params"), py::arg("threshold"),
        "Total delivery time when ranks below the threshold are broadcast "
        "and the rest unicast.");
  m.def("time_increment", &time_increment, py::arg("params"),
        py::arg("threshold"),
        "Analytic cost increment between consecutive thresholds.");
  m.def("argmin_discrete", &argmin_discrete, py::arg("params"),
        "Full threshold scan with argmin, sign-change cross-check, and the "
        "closed-form estimate when available.");
  m.def("closed_form_threshold", &closed_form_threshold, py::arg("params"),
        "Continuous-relaxation threshold; requires alpha > 1.");

  py::enum_<bf::Mode>(m, "Mode")
      .value("Unicast", bf::Mode::Unicast)
      .value("Broadcast", bf::Mode::Broadcast);

  py::enum_<bf::SolveOutcome>(m, "SolveOutcome")
      .value("Optimal", bf::SolveOutcome::Optimal)
      .value("DegenerateChannel", bf::SolveOutcome::DegenerateChannel)
      .value("SolverFailure", bf::SolveOutcome::SolverFailure);

  py::class_<bf::UnicastProblem>(m, "UnicastProblem",
                                 "One precoder per scheduled user over a "
                                 "square channel, per-antenna power limits.")
      .def(py::init([](const Eigen::MatrixXcd& channel,
                       const Eigen::VectorXd& sinr_weights,
                       const Eigen::VectorXd& power_limits,
                       const Eigen::VectorXd& noise_power) {
             return bf::UnicastProblem{channel, sinr_weights, power_limits,
                                       noise_power};
           }),
           py::arg("channel"), py::arg("sinr_weights"),
           py::arg("power_limits"), py::arg("noise_power"))
      .def_readwrite("channel", &bf::UnicastProblem::channel)
      .def_readwrite("sinr_weights", &bf::UnicastProblem::sinr_weights)
      .def_readwrite("power_limits", &bf::UnicastProblem::power_limits)
      .def_readwrite("noise_power", &bf::UnicastProblem::noise_power)
      .def("validate", &bf::UnicastProblem::validate);

  py::class_<bf::BroadcastProblem>(m, "BroadcastProblem",
                                   "One common precoder serving every user.")
      .def(py::init([](const Eigen::MatrixXcd& channel,
                       const Eigen::VectorXd& sinr_weights,
                       const Eigen::VectorXd& power_limits,
                       const Eigen::VectorXd& noise_power) {
             return bf::BroadcastProblem{channel, sinr_weights, power_limits,
                                         noise_power};
           }),
           py::arg("channel"), py::arg("sinr_weights"),
           py::arg("power_limits"), py::arg("noise_power"))
      .def_readwrite("channel", &bf::BroadcastProblem::channel)
      .def_readwrite("sinr_weights", &bf::BroadcastProblem::sinr_weights)
      .def_readwrite("power_limits", &bf::BroadcastProblem::power_limits)
      .def_readwrite("noise_power", &bf::BroadcastProblem::noise_power)
      .def("validate", &bf::BroadcastProblem::validate);

  py::class_<bf::PrecoderSet>(m, "PrecoderSet")
      .def_readonly("mode", &bf::PrecoderSet::mode)
      .def_readonly("weights", &bf::PrecoderSet::weights);

  py::class_<bf::BeamformingResult>(m, "BeamformingResult")
      .def_readonly("status", &bf::BeamformingResult::status)
      .def_readonly("precoders", &bf::BeamformingResult::precoders)
      .def_readonly("t_star", &bf::BeamformingResult::t_star)
      .def_readonly("relaxation_bound",
                    &bf::BeamformingResult::relaxation_bound)
      .def_readonly("achieved_sinr", &bf::BeamformingResult::achieved_sinr)
      .def_readonly("rank_residual", &bf::BeamformingResult::rank_residual)
      .def_readonly("randomization_count",
                    &bf::BeamformingResult::randomization_count)
      .def_readonly("solver_iterations",
                    &bf::BeamformingResult::solver_iterations);

  m.def("solve_broadcast_maxmin", &bf::solve_broadcast_maxmin,
        py::arg("problem"), py::arg("n_rand") = 300, py::arg("seed") = 0,
        py::call_guard<py::gil_scoped_release>(),
        "Semidefinite relaxation of the common-precoder max-min problem "
        "followed by Gaussian randomization.");
  m.def("solve_unicast_maxmin", &bf::solve_unicast_maxmin, py::arg("problem"),
        py::arg("bisection_tol") = 1e-4,
        py::call_guard<py::gil_scoped_release>(),
        "Bisection on the balanced SINR level with per-user covariance "
        "feasibility solves.");
  m.def("sinr", &bf::sinr, py::arg("precoders"), py::arg("channel_row"),
        py::arg("noise_power"), py::arg("user_index"));
  m.def("per_antenna_power", &bf::per_antenna_power, py::arg("precoders"));
  m.def("spectral_efficiency", &bf::spectral_efficiency, py::arg("t_star"),
        "Shannon mapping log2(1 + t), bits/s/Hz.");

  py::class_<Topology>(m, "Topology",
                       "Linear base-station arrangement with user "
                       "coordinates on the same axis.")
      .def_readonly("num_bs", &Topology::num_bs)
      .def_readonly("spacing", &Topology::spacing)
      .def_readonly("bs_positions", &Topology::bs_positions)
      .def_readonly("user_positions", &Topology::user_positions)
      .def("num_users", &Topology::num_users);

  m.def("place_users", &place_users, py::arg("num_bs"), py::arg("spacing"),
        py::arg("num_users"), py::arg("seed"),
        "Uniform user placement over the cluster span extended by half a "
        "cell on each side.");

  py::class_<ChannelConfig>(m, "ChannelConfig")
      .def(py::init([](double path_loss_exponent, bool fading,
                       double noise_power, std::uint64_t seed) {
             return ChannelConfig{path_loss_exponent, fading, noise_power,
                                  seed};
           }),
           py::arg("path_loss_exponent") = 3.0, py::arg("fading") = true,
           py::arg("noise_power") = 1.0, py::arg("seed") = 0)
      .def_readwrite("path_loss_exponent", &ChannelConfig::path_loss_exponent)
      .def_readwrite("fading", &ChannelConfig::fading)
      .def_readwrite("noise_power", &ChannelConfig::noise_power)
      .def_readwrite("seed", &ChannelConfig::seed)
      .def("validate", &ChannelConfig::validate);

  py::class_<ChannelMatrix>(m, "ChannelMatrix")
      .def_readonly("coefficients", &ChannelMatrix::coefficients)
      .def_readonly("fading_draws", &ChannelMatrix::fading_draws)
      .def_readonly("distances", &ChannelMatrix::distances);

  m.def("generate_channel",
        py::overload_cast<const Topology&, const ChannelConfig&,
                          std::uint64_t>(&generate_channel),
        py::arg("topology"), py::arg("config"), py::arg("seed"),
        "Rayleigh fading over distance-based path loss; h = g / (1 + "
        "d^(eta/2)).");

  py::class_<sim::SimConfig>(m, "SimConfig",
                             "Simulation inputs; defaults mirror the "
                             "reference experiment.")
      .def(py::init<>())
      .def_readwrite("n_bs", &sim::SimConfig::n_bs)
      .def_readwrite("n_users", &sim::SimConfig::n_users)
      .def_readwrite("i_max", &sim::SimConfig::i_max)
      .def_readwrite("power_dbw", &sim::SimConfig::power_dbw)
      .def_readwrite("eta", &sim::SimConfig::eta)
      .def_readwrite("alpha", &sim::SimConfig::alpha)
      .def_readwrite("sigma2", &sim::SimConfig::sigma2)
      .def_readwrite("spacing", &sim::SimConfig::spacing)
      .def_readwrite("n_mc", &sim::SimConfig::n_mc)
      .def_readwrite("n_rand", &sim::SimConfig::n_rand)
      .def_readwrite("seed", &sim::SimConfig::seed)
      .def_readwrite("file_size_bits", &sim::SimConfig::file_size_bits)
      .def_readwrite("bandwidth_hz", &sim::SimConfig::bandwidth_hz)
      .def_readwrite("out_dir", &sim::SimConfig::out_dir)
      .def_readwrite("credit_streams", &sim::SimConfig::credit_streams)
      .def("power_linear", &sim::SimConfig::power_linear)
      .def("validate", &sim::SimConfig::validate);

  m.def("parse_config", &sim::parse_config, py::arg("path"),
        "Parses flat key = value lines from a file.");
  m.def("parse_config_text", &sim::parse_config_text, py::arg("text"),
        py::arg("name") = std::string("<string>"));

  py::class_<sim::DrawRecord>(m, "DrawRecord")
      .def_readonly("draw", &sim::DrawRecord::draw)
      .def_readonly("unicast_ok", &sim::DrawRecord::unicast_ok)
      .def_readonly("broadcast_ok", &sim::DrawRecord::broadcast_ok)
      .def_readonly("t_unicast", &sim::DrawRecord::t_unicast)
      .def_readonly("bound_unicast", &sim::DrawRecord::bound_unicast)
      .def_readonly("t_broadcast", &sim::DrawRecord::t_broadcast)
      .def_readonly("bound_broadcast", &sim::DrawRecord::bound_broadcast);

  py::class_<sim::EfficiencyEstimate>(m, "EfficiencyEstimate")
      .def_readonly("samples", &sim::EfficiencyEstimate::samples)
      .def_readonly("failed_draws", &sim::EfficiencyEstimate::failed_draws)
      .def_readonly("mean_spf_unicast",
                    &sim::EfficiencyEstimate::mean_spf_unicast)
      .def_readonly("se_spf_unicast", &sim::EfficiencyEstimate::se_spf_unicast)
      .def_readonly("mean_spf_broadcast",
                    &sim::EfficiencyEstimate::mean_spf_broadcast)
      .def_readonly("se_spf_broadcast",
                    &sim::EfficiencyEstimate::se_spf_broadcast)
      .def_readonly("mean_spf_broadcast_achieved",
                    &sim::EfficiencyEstimate::mean_spf_broadcast_achieved)
      .def_readonly("se_spf_broadcast_achieved",
                    &sim::EfficiencyEstimate::se_spf_broadcast_achieved)
      .def_readonly("elapsed_seconds",
                    &sim::EfficiencyEstimate::elapsed_seconds);

  m.def("evaluate_draw", &sim::evaluate_draw, py::arg("config"),
        py::arg("channel"), py::arg("draw_seed"),
        py::call_guard<py::gil_scoped_release>(),
        "Solves both delivery modes on one channel realization.");
  m.def("estimate_spectral_efficiencies", &sim::estimate_spectral_efficiencies,
        py::arg("config"), py::arg("threads") = 1,
        py::call_guard<py::gil_scoped_release>(),
        "Seeded Monte Carlo over placement and fading; bit-identical for "
        "every thread count.");

  py::class_<sim::AlphaReport>(m, "AlphaReport")
      .def_readonly("alpha", &sim::AlphaReport::alpha)
      .def_readonly("threshold", &sim::AlphaReport::threshold);

  py::class_<sim::ImprovementSummary>(m, "ImprovementSummary")
      .def_readonly("per_alpha", &sim::ImprovementSummary::per_alpha)
      .def_readonly("max_improvement_vs_unicast",
                    &sim::ImprovementSummary::max_improvement_vs_unicast)
      .def_readonly("max_improvement_vs_broadcast",
                    &sim::ImprovementSummary::max_improvement_vs_broadcast)
      .def_readonly("best_alpha", &sim::ImprovementSummary::best_alpha);

  m.def("cost_params", &sim::cost_params, py::arg("config"), py::arg("alpha"),
        py::arg("spf_uni"), py::arg("spf_bc"),
        "Delivery-time inputs for one alpha, applying the stream credit.");
  m.def("improvement_report", &sim::improvement_report, py::arg("config"),
        py::arg("spf_uni"), py::arg("spf_bc"),
        "Threshold analysis across the config's alpha list.");

  m.def("run_simulate", &sim::run_simulate, py::arg("config"),
        py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>(),
        "Full pipeline into config.out_dir: run_report.txt, "
        "spf_samples.csv, cost_curves.csv, demand_profile.csv.");
  m.def("run_threshold", &sim::run_threshold, py::arg("config"),
        py::arg("spf_uni"), py::arg("spf_bc"),
        "Threshold analysis at fixed spectral efficiencies.");
  m.def("run_sweep", &sim::run_sweep, py::arg("config"), py::arg("spf_uni"),
        py::arg("spf_bc"), "Cost curves over the alpha list.");
  m.def("run_demand", &sim::run_demand, py::arg("config"), py::arg("spf_uni"),
        py::arg("spf_bc"), "Expected per-rank demand profile.");
}
