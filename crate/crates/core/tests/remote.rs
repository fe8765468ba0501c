//! Remote evaluation paths that need no game server, plus an opt-in live
//! check (`--features live-rcon`, server address from the environment).

use beltforge::grid::{ProblemMatrix, SolutionMatrix};
use beltforge::rcon::commands::emit_commands;
use beltforge::rcon::fake::{Behavior, FakeServer, Responder};
use beltforge::rcon::{remote_evaluate, Session, DEFAULT_TIMEOUT};
use beltforge::{EvalBackend, SimBackend, SimConfig, Weights};

fn l_path() -> SolutionMatrix {
    SolutionMatrix::from_codes(3, &[3, 4, 4, 3, 0, 0, 3, 0, 0]).unwrap()
}

#[test]
fn l_path_commands_match_fixture() {
    let p = ProblemMatrix::canonical(3).unwrap();
    let cmds = emit_commands(&p, &l_path(), &SimConfig::new(12, 3).unwrap());
    let expected = include_str!("fixtures/l_path_commands.txt");
    assert_eq!(cmds.join("\n") + "\n", expected);
}

#[test]
fn scripted_server_scores_the_l_path() {
    let server = FakeServer::spawn(Behavior::Password("pw".into()), Responder::Simulate).unwrap();
    let mut session = Session::connect(server.addr(), "pw", DEFAULT_TIMEOUT).unwrap();
    let p = ProblemMatrix::canonical(3).unwrap();
    let cfg = SimConfig::new(12, 3).unwrap();
    let w = Weights::default();
    let remote = remote_evaluate(&mut session, &p, &l_path(), &cfg, &w).unwrap();
    let native = SimBackend.evaluate(&p, &l_path(), &cfg, &w).unwrap();
    assert_eq!(remote, native);
    assert_eq!(remote.fitness, 0.875);
}

#[cfg(feature = "live-rcon")]
#[test]
fn live_server_delivers_on_the_l_path() {
    let config = beltforge::rcon::RconConfig::from_env().expect("BELTFORGE_RCON_* set");
    let mut session = config.connect().unwrap();
    let p = ProblemMatrix::canonical(3).unwrap();
    let e = remote_evaluate(&mut session, &p, &l_path(), &SimConfig::default(), &Weights::default()).unwrap();
    assert!(e.items_out > 0);
}

