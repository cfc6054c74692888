#include <map>

#include "netkin/error.hpp"
#include "netkin/scenario.hpp"

namespace netkin {

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto &r : rows) {
        Eigen::Index j = 0;
        for (double x : r) m(i, j++) = x;
        ++i;
    }
    return m;
}

Vector from_list(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

// Five-node network shared by the synthetic tests.
Scenario table1_base() {
    Scenario s;
    s.matrix.entries = from_rows({
        {0.2, 0.5, 0.15, 0.1, 0.1},
        {0.2, 0.2, 0.45, 0.4, 0.2},
        {0.2, 0.1, 0.05, 0.2, 0.5},
        {0.2, 0.1, 0.1, 0.15, 0.1},
        {0.2, 0.1, 0.25, 0.15, 0.1},
    });
    s.initial_rho = from_list({0.35, 0.1, 0.3, 0.05, 0.2});
    s.initial_m = from_list({2.0, 4.0, 0.1, 1.0, 1.5});
    s.policy.q = 2.0;
    s.model.chi = 1.0;
    return s;
}

Scenario test1(const std::string &name, MobilityMode mobility, InteractionMode interaction) {
    Scenario s = table1_base();
    s.name = name;
    s.model.variant = ModelVariant::Exchange;
    s.model.mu = 1.0;
    s.model.nu1 = from_list({0.25, 0.5, 0.15, 0.2, 0.75});
    s.model.nu2 = from_list({0.8, 0.5, 0.75, 0.1, 0.6});
    s.policy.mobility = mobility;
    s.policy.interaction = interaction;
    s.integration.t_end = 100.0;
    return s;
}

Scenario with_healing(Scenario s) {
    s.model.variant = ModelVariant::InfectionHealing;
    s.model.nu1 = Vector::Constant(s.size(), 0.15);
    s.model.nu2 = Vector::Constant(s.size(), 0.9);
    s.model.sigma = 1.0;
    s.model.gamma = 1.0;
    s.integration.t_end = 50.0;
    return s;
}

Scenario test2(const std::string &name, bool controlled) {
    Scenario s = with_healing(table1_base());
    s.name = name;
    if (controlled) {
        s.policy.mobility = MobilityMode::Feedback;
        s.policy.interaction = InteractionMode::Feedback;
    }
    return s;
}

Scenario lombardy(const std::string &name, bool relaxed) {
    Scenario s;
    s.name = name;
    // 2016 province-to-province mobility, column j = origin province
    s.matrix.entries = from_rows({
        {0.8757873534506977, 0.03526595143954377, 0.0054794387934947435, 0.02158985767625072, 0.03736936844586586, 0.002302956167961513, 0.011334416300349221, 0.013701264437385683, 0.0029183476450934482, 0.002845914850987816, 0.0036488799229510774, 0.0032052497810947764},
        {0.04635026989878317, 0.9257936902391382, 0.0014357475896173866, 0.03174345308918152, 0.002270751201990444, 0.003594862553021278, 0.003661559967382806, 0.0050014536139418265, 0.034928299968198774, 0.002278835850734442, 0.0031427242639248897, 0.002446923335611406},
        {0.002295776667751961, 0.0005129948376395526, 0.8154610223024258, 0.0006910638094203594, 0.034635103119906446, 0.001548916939116723, 0.03263588465510188, 0.007767637575529528, 0.0006900522857913599, 0.0017705852685289778, 0.015366268112956225, 0.024656214415861424},
        {0.007162945108250052, 0.008473783507703942, 0.0005042923032038033, 0.8529198120471422, 0.00044919089214553526, 0.041738089168026835, 0.0008482608670884448, 0.004101798820922688, 0.01812697046679227, 0.002174689338494364, 0.00032355456510421775, 0.0004433451163952441},
        {0.010160987217152676, 0.000519747424712148, 0.020542885462587812, 0.00042586302410433605, 0.7816261016009323, 0.0005725317202001148, 0.03039899767048894, 0.0038960247334306314, 0.00029779176703147295, 0.0006259074183011227, 0.01616512700820268, 0.0012645042446099597},
        {0.00044570353234450126, 0.000573603881857499, 0.0005527865149536564, 0.023921110835510392, 0.0004542106282002642, 0.7456751566716444, 0.0004138822564682702, 0.010470233241153605, 0.00043709487768829396, 0.012195850902711174, 0.0002701413218153193, 0.0007310066719944785},
        {0.008474134237854567, 0.0020595765975844737, 0.05198589677940409, 0.0018829004382285772, 0.08172277492366109, 0.0012378704470828133, 0.7104608385707953, 0.044379804233793264, 0.0013092858347657729, 0.0032717205435243, 0.002271165866704664, 0.008437447792351163},
        {0.0446185868510531, 0.013123664706978934, 0.053052430159367024, 0.04106804676763683, 0.047090653451488364, 0.17111049006913687, 0.1978074094567671, 0.8672917369740902, 0.0035986247859183156, 0.10563301428593681, 0.004269616682098683, 0.10645402105185095},
        {0.0005365037466188645, 0.010815293520094473, 0.000351684818746578, 0.02149587688610248, 0.0001434776436996389, 0.0008074804316553985, 0.0004333429105568558, 0.0003645152123566003, 0.9349275894464925, 0.0009036078108297096, 0.00023193648008865394, 0.0005333297950915316},
        {0.0012880928296168286, 0.0008864002328547886, 0.0016211972361365747, 0.0028965791176721973, 0.0009985689223157095, 0.027892767776822522, 0.002062754282659092, 0.015529675735539672, 0.0011191519702831402, 0.8647788918483131, 0.0005719695989734889, 0.001587329172944043},
        {0.0005778134784514185, 0.000459143073049482, 0.005893878831690055, 0.00018553162048871004, 0.009780314082241892, 0.000202691408857945, 0.0005387291445374318, 0.00018473638480129612, 0.0001500703598885761, 0.0001647479386678979, 0.9524046220972929, 0.0002855433643589506},
        {0.0023018329814251818, 0.0015161505388427983, 0.04311873920837233, 0.0011799046882619878, 0.003459485087552358, 0.003316186646473646, 0.009403923917804436, 0.02731111903705499, 0.0014967205920561203, 0.003356233942970127, 0.0013339940798873212, 0.849955085257836},
    });
    s.initial_rho = from_list({
        0.111429568301365,
        0.126797034990562,
        0.0361007484289710,
        0.0601448912068948,
        0.0340388722947419,
        0.0229591510831975,
        0.0870627833902669,
        0.318267453990158,
        0.0413704681415706,
        0.0544775057762816,
        0.0183028026195141,
        0.0890487197764766
    });
    s.matrix.tolerance = ingested_matrix_tolerance;
    s.initial_m = Vector::Constant(12, 1.0 / 6.0);
    s.initial_m[5] = 6.0;
    s.policy.q = 2.0;
    s.model.chi = 1.0;
    s = with_healing(std::move(s));
    if (relaxed) s.policy.interaction = InteractionMode::ExplicitLaw;
    return s;
}

using Factory = Scenario (*)();

const std::map<std::string, Factory> &registry() {
    static const std::map<std::string, Factory> presets{
        {"test1_uncontrolled", [] { return test1("test1_uncontrolled", MobilityMode::Off, InteractionMode::Off); }},
        {"test1_mobility_only",
         [] { return test1("test1_mobility_only", MobilityMode::Feedback, InteractionMode::Off); }},
        {"test1_mobility_suppression",
         [] { return test1("test1_mobility_suppression", MobilityMode::FullSuppression, InteractionMode::Off); }},
        {"test1_early_stop",
         [] {
             Scenario s = test1("test1_early_stop", MobilityMode::Feedback, InteractionMode::FeedbackUntil);
             s.policy.t_bar = 30.0;
             return s;
         }},
        {"test1_full", [] { return test1("test1_full", MobilityMode::Feedback, InteractionMode::Feedback); }},
        {"test2_uncontrolled", [] { return test2("test2_uncontrolled", false); }},
        {"test2_full_control", [] { return test2("test2_full_control", true); }},
        {"lombardy_uncontrolled", [] { return lombardy("lombardy_uncontrolled", false); }},
        {"lombardy_relaxed", [] { return lombardy("lombardy_relaxed", true); }},
        {"fig1_nu_equal",
         [] {
             Scenario s = test1("fig1_nu_equal", MobilityMode::Off, InteractionMode::Off);
             s.model.nu1 = Vector::Constant(5, 0.5);
             s.model.nu2 = Vector::Constant(5, 0.5);
             s.integration.t_end = 200.0;
             return s;
         }},
        {"fig2_rhoic",
         [] {
             Scenario s = test2("fig2_rhoic", false);
             s.model.chi = 0.0;
             return s;
         }},
    };
    return presets;
}

} // namespace

Scenario preset(const std::string &name) {
    const auto it = registry().find(name);
    if (it == registry().end()) fail(ErrorCode::UnknownPreset, "unknown preset '" + name + "'");
    Scenario s = it->second();
    validate(s);
    return s;
}

const std::vector<std::string> &preset_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto &[name, _] : registry()) out.push_back(name);
        return out;
    }();
    return names;
}

} // namespace netkin
