use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;

use qbot_core::gridworld::load_map;
use qbot_core::session::{replay, serve, Response};
use qbot_core::synth::Controller;

const T_JUNCTION: &str = "#####\n#G..#\n##.##\n##^##\n#####\n";

struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Client {
    fn send(&mut self, line: &str) {
        self.writer.write_all(line.as_bytes()).unwrap();
        self.writer.write_all(b"\n").unwrap();
    }

    fn recv(&mut self) -> Response {
        let mut line = String::new();
        self.reader.read_line(&mut line).unwrap();
        serde_json::from_str(&line).unwrap_or_else(|e| panic!("{line:?}: {e}"))
    }
}

fn connect() -> Client {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let controller = Arc::new(Controller::builtin().unwrap());
    std::thread::spawn(move || serve(listener, controller));
    let stream = TcpStream::connect(addr).unwrap();
    Client {
        reader: BufReader::new(stream.try_clone().unwrap()),
        writer: stream,
    }
}

#[test]
fn interactive_t_junction_over_tcp() {
    let mut c = connect();
    c.send(&serde_json::json!({"type": "start", "map": T_JUNCTION}).to_string());
    assert!(matches!(c.recv(), Response::State { .. }));

    let mut records = Vec::new();
    c.send(r#"{"type":"step"}"#);
    match c.recv() {
        Response::Record(r) => records.push(r),
        other => panic!("{other:?}"),
    }
    c.send(r#"{"type":"step"}"#);
    let Response::Ask { clear, .. } = c.recv() else { panic!() };
    assert_eq!(clear.len(), 2);
    c.send(r#"{"type":"answer","direction":"F"}"#);
    let Response::Record(r) = c.recv() else { panic!() };
    records.push(r);

    c.send(r#"{"type":"step"}"#);
    let Response::Ask { clear, .. } = c.recv() else { panic!() };
    let letters: String = clear.iter().map(|d| d.letter()).collect();
    assert_eq!(letters, "BLR");
    c.send(r#"{"type":"answer","direction":"F"}"#);
    assert!(matches!(c.recv(), Response::Error { code, .. } if code == "invalid_choice"));
    c.send(r#"{"type":"answer","direction":"L"}"#);
    let Response::Record(r) = c.recv() else { panic!() };
    records.push(r);
    assert!(matches!(c.recv(), Response::Terminal { .. }));

    let (map, start) = load_map(T_JUNCTION).unwrap();
    let ctl = Controller::builtin().unwrap();
    replay(&records, &ctl, Some((&map, start))).unwrap();
}
