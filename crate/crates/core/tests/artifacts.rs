use pcat_core::compile::{compile, Construction};
use pcat_core::explorer::{explore, Bounds};
use pcat_core::machine::bundled;
use pcat_core::model::validate_system;
use pcat_core::text::psys::{parse_system, render_system};
use pcat_core::text::rm::{parse_machine, render_machine};

#[test]
fn every_artifact_survives_render_and_parse() {
    for c in Construction::ALL {
        for (name, m) in bundled::all() {
            let art = compile(&m, c).unwrap();
            let text = art.render();
            let back = parse_system(&text).unwrap_or_else(|e| panic!("{c}/{name}: {e}\n{text}"));
            assert!(validate_system(&back).is_empty(), "{c}/{name}: {:?}", validate_system(&back));
            assert_eq!(back.rules, art.system.rules, "{c}/{name}");
            assert_eq!(back.initial, art.system.initial, "{c}/{name}");
            assert_eq!(back.control, art.system.control, "{c}/{name}");
            assert_eq!(back.variant, art.system.variant, "{c}/{name}");
            assert_eq!(back.output_order, art.system.output_order, "{c}/{name}");
            assert_eq!(render_system(&back, &art.header()), text);
            // The header is a comment: behaviour is unchanged.
            let a = explore(&art.system, &Bounds::steps(30)).unwrap();
            let b = explore(&back, &Bounds::steps(30)).unwrap();
            assert_eq!(a.halting, b.halting, "{c}/{name}");
        }
    }
}

#[test]
fn header_records_the_source_machine() {
    let art = compile(&bundled::decr(), Construction::Mcre).unwrap();
    let header: String = art.header().join("\n");
    assert!(header.contains("construction: mcre"));
    assert!(header.contains("l1: SUB(1) l2 l3"));
    let src: String = render_machine(&art.source);
    assert_eq!(parse_machine(&src).unwrap(), art.source);
}

#[test]
fn bad_labels_are_refused() {
    let m = parse_machine("registers 3\nc: ADD(3) lh lh\nlh: HALT\n").unwrap();
    for c in Construction::ALL {
        assert!(compile(&m, c).is_err(), "{c}");
    }
}
