use super::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const KIWIPETE: &str = "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1";

#[test]
fn start_position_basics() {
    let pos = Position::start();
    assert_eq!(pos.fen(), START_FEN);
    assert_eq!(pos.legal_moves().len(), 20);
    assert!(!pos.in_check());
    assert_eq!(pos.side_to_move(), Color::White);
}

#[test]
fn fen_round_trips_bit_exactly() {
    let fens = [
        START_FEN,
        KIWIPETE,
        "8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1",
        "r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1",
        "rnbq1k1r/pp1Pbppp/2p5/8/2B5/8/PPP1NnPP/RNBQK2R w KQ - 1 8",
        "r4rk1/1pp1qppp/p1np1n2/2b1p1B1/2B1P1b1/P1NP1N2/1PP1QPPP/R4RK1 w - - 0 10",
    ];
    for fen in fens {
        let pos = Position::from_fen(fen).unwrap();
        assert_eq!(pos.fen(), fen, "round trip of {fen}");
        assert_eq!(Position::from_fen(&pos.fen()).unwrap(), pos);
    }
}

#[test]
fn fen_field_count_is_checked() {
    assert_eq!(
        Position::from_fen("8/8/8/8/8/8/8/8 w - -"),
        Err(FenError::FieldCount(4))
    );
    // The lenient form fills in the missing clocks instead.
    let lenient =
        Position::from_fen_lenient("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq -")
            .unwrap();
    assert_eq!(lenient.fen(), START_FEN);
}

#[test]
fn fen_rejects_malformed_placement() {
    assert!(matches!(
        Position::from_fen("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP w KQkq - 0 1"),
        Err(FenError::RankCount(7))
    ));
    assert!(matches!(
        Position::from_fen("rnbqkbnr/ppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"),
        Err(FenError::RankWidth { .. })
    ));
    assert!(matches!(
        Position::from_fen("rnbqkbnr/ppppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"),
        Err(FenError::RankWidth { .. })
    ));
    assert!(matches!(
        Position::from_fen("rnbqkbnr/ppppTppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"),
        Err(FenError::IllegalPieceChar('T'))
    ));
}

#[test]
fn fen_rejects_bad_kings_and_checks() {
    assert_eq!(
        Position::from_fen("8/8/8/8/8/8/8/K7 w - - 0 1"),
        Err(FenError::MissingKing(Color::Black))
    );
    assert_eq!(
        Position::from_fen("kk6/8/8/8/8/8/8/K7 w - - 0 1"),
        Err(FenError::MultipleKings(Color::Black))
    );
    // Black king attacked while White is to move.
    assert_eq!(
        Position::from_fen("k7/1Q6/8/8/8/8/8/K7 w - - 0 1"),
        Err(FenError::SideNotToMoveInCheck)
    );
}

#[test]
fn fen_rejects_bad_scalar_fields() {
    assert_eq!(
        Position::from_fen("k7/8/8/8/8/8/8/K7 x - - 0 1"),
        Err(FenError::SideToMove("x".into()))
    );
    assert_eq!(
        Position::from_fen("k7/8/8/8/8/8/8/K7 w KX - 0 1"),
        Err(FenError::Castling("KX".into()))
    );
    assert_eq!(
        Position::from_fen("k7/8/8/8/8/8/8/K7 w - e5 0 1"),
        Err(FenError::EnPassant("e5".into()))
    );
    assert_eq!(
        Position::from_fen("k7/8/8/8/8/8/8/K7 w - - x 1"),
        Err(FenError::HalfmoveClock("x".into()))
    );
    assert_eq!(
        Position::from_fen("k7/8/8/8/8/8/8/K7 w - - 0 0"),
        Err(FenError::FullmoveNumber("0".into()))
    );
}

#[test]
fn inconsistent_castling_rights_are_dropped() {
    // White king has moved off e1: both white flags must go.
    let pos = Position::from_fen("r3k2r/8/8/8/8/8/8/R2K3R w KQkq - 0 1").unwrap();
    assert_eq!(pos.castling().to_string(), "kq");
}

#[test]
fn en_passant_is_canonicalized() {
    // Double push with no enemy pawn adjacent: target is dropped.
    let pos = Position::start().apply(
        &parse_san(&Position::start(), "e4").unwrap(),
    );
    assert_eq!(pos.en_passant(), None);
    assert!(pos.fen().contains(" b KQkq - "));

    // Same double push parsed from a FEN that still advertises e3.
    let verbose =
        Position::from_fen("rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq e3 0 1")
            .unwrap();
    assert_eq!(verbose, pos);

    // A capturable double push keeps the target through the round trip.
    let mut pos = Position::start();
    for san in ["e4", "a6", "e5", "d5"] {
        pos = pos.apply(&parse_san(&pos, san).unwrap());
    }
    assert_eq!(pos.en_passant(), Some(Square::parse("d6").unwrap()));
    assert_eq!(Position::from_fen(&pos.fen()).unwrap(), pos);
}

#[test]
fn en_passant_with_pinned_capturer_is_dropped() {
    // After g2-g4 the only adjacent black pawn is f4, but fxg3 would open
    // the fourth rank from the b4 rook to the h4 king, so the capture is
    // illegal and the canonical position carries no en-passant target.
    let pos = Position::from_fen("8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1").unwrap();
    let child = pos.apply(&parse_san(&pos, "g4").unwrap());
    assert_eq!(child.en_passant(), None);
    assert!(parse_san(&child, "fxg3").is_err());
}

#[test]
fn perft_reference_counts() {
    let start = Position::start();
    assert_eq!(start.perft(1), 20);
    assert_eq!(start.perft(2), 400);
    assert_eq!(start.perft(3), 8_902);
    assert_eq!(start.perft(4), 197_281);

    let kiwipete = Position::from_fen(KIWIPETE).unwrap();
    assert_eq!(kiwipete.perft(1), 48);
    assert_eq!(kiwipete.perft(2), 2_039);
    assert_eq!(kiwipete.perft(3), 97_862);

    let endgame = Position::from_fen("8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1").unwrap();
    assert_eq!(endgame.perft(1), 14);
    assert_eq!(endgame.perft(2), 191);
    assert_eq!(endgame.perft(3), 2_812);
    assert_eq!(endgame.perft(4), 43_238);

    let promotions =
        Position::from_fen("r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1")
            .unwrap();
    assert_eq!(promotions.perft(1), 6);
    assert_eq!(promotions.perft(2), 264);
    assert_eq!(promotions.perft(3), 9_467);

    let busy = Position::from_fen("rnbq1k1r/pp1Pbppp/2p5/8/2B5/8/PPP1NnPP/RNBQK2R w KQ - 1 8")
        .unwrap();
    assert_eq!(busy.perft(1), 44);
    assert_eq!(busy.perft(2), 1_486);
    assert_eq!(busy.perft(3), 62_379);

    let symmetric =
        Position::from_fen("r4rk1/1pp1qppp/p1np1n2/2b1p1B1/2B1P1b1/P1NP1N2/1PP1QPPP/R4RK1 w - - 0 10")
            .unwrap();
    assert_eq!(symmetric.perft(1), 46);
    assert_eq!(symmetric.perft(2), 2_079);
    assert_eq!(symmetric.perft(3), 89_890);
}

#[test]
fn san_formatting_covers_special_moves() {
    let pos = Position::from_fen(KIWIPETE).unwrap();
    let sans: Vec<String> = pos.legal_moves().iter().map(|m| pos.san(m)).collect();
    assert!(sans.contains(&"O-O".to_string()));
    assert!(sans.contains(&"O-O-O".to_string()));
    assert!(sans.contains(&"Nxf7".to_string()));
    assert!(sans.contains(&"Bxa6".to_string()));
    assert!(sans.contains(&"gxh3".to_string()));
    assert!(sans.contains(&"dxe6".to_string()));

    // Promotion with capture and check.
    let pos = Position::from_fen("rnbq1bnr/ppPkpppp/8/8/8/8/PP1PPPPP/RNBQKBNR w KQ - 1 5")
        .unwrap();
    let sans: Vec<String> = pos.legal_moves().iter().map(|m| pos.san(m)).collect();
    assert!(sans.contains(&"cxb8=Q".to_string()));
    assert!(sans.contains(&"cxd8=Q+".to_string()));
}

#[test]
fn san_disambiguation_is_minimal() {
    // Rooks on a1 and h1 share rank 1: file disambiguation suffices.
    let pos = Position::from_fen("6k1/8/8/8/8/8/3K4/R6R w - - 0 1").unwrap();
    let sans: Vec<String> = pos.legal_moves().iter().map(|m| pos.san(m)).collect();
    assert!(sans.contains(&"Rad1".to_string()));
    assert!(sans.contains(&"Rhd1".to_string()));
    assert!(sans.contains(&"Rab1".to_string()));

    // Queens on d1, d5, h5 all reach d3; every printed SAN must resolve
    // back to exactly the move that produced it.
    let pos = Position::from_fen("1k6/7Q/8/3Q4/8/8/8/K2Q4 w - - 0 1").unwrap();
    let sans: Vec<String> = pos.legal_moves().iter().map(|m| pos.san(m)).collect();
    assert!(sans.iter().any(|s| s == "Qd5d3" || s == "Q5d3"));
    for (san, m) in sans.iter().zip(pos.legal_moves()) {
        assert_eq!(parse_san(&pos, san).unwrap(), m, "round trip of {san}");
    }
}

#[test]
fn parse_san_is_lenient_about_annotations_and_lan() {
    let pos = Position::start();
    let nf3 = parse_san(&pos, "Nf3").unwrap();
    assert_eq!(parse_san(&pos, "Ng1f3").unwrap(), nf3);
    assert_eq!(parse_san(&pos, "Nf3!?").unwrap(), nf3);
    assert_eq!(parse_san(&pos, "Nf3+").unwrap(), nf3);
    let e4 = parse_san(&pos, "e4").unwrap();
    assert_eq!(parse_san(&pos, "e2e4").unwrap(), e4);
    assert_eq!(pos.move_from_uci("e2e4").unwrap(), e4);
}

#[test]
fn parse_san_reports_distinct_errors() {
    let pos = Position::start();
    assert!(matches!(
        parse_san(&pos, "??"),
        Err(SanError::Unparseable(_))
    ));
    assert!(matches!(
        parse_san(&pos, "Ke2"),
        Err(SanError::IllegalMove(_))
    ));
    let two_rooks = Position::from_fen("6k1/8/8/8/8/8/3K4/R6R w - - 0 1").unwrap();
    assert!(matches!(
        parse_san(&two_rooks, "Rd1"),
        Err(SanError::Ambiguous { .. })
    ));
    let promo = Position::from_fen("k7/4P3/8/8/8/8/8/K7 w - - 0 1").unwrap();
    assert!(matches!(
        parse_san(&promo, "e8"),
        Err(SanError::MissingPromotion(_))
    ));
    assert!(parse_san(&promo, "e8=N").is_ok());
    assert!(parse_san(&promo, "e8Q").is_ok());
}

#[test]
fn strict_parse_validates_annotations() {
    let pos = Position::start();
    assert!(parse_san_strict(&pos, "Nf3").is_ok());
    assert!(matches!(
        parse_san_strict(&pos, "Nf3+"),
        Err(SanError::Annotation { .. })
    ));
    let scholars =
        Position::from_fen("r1bqkbnr/pppp1ppp/2n5/4p3/2B1P3/5Q2/PPPP1PPP/RNB1K1NR w KQkq - 4 4")
            .unwrap();
    assert!(parse_san_strict(&scholars, "Qxf7#").is_ok());
    assert!(matches!(
        parse_san_strict(&scholars, "Qxf7+"),
        Err(SanError::Annotation { .. })
    ));
    assert!(matches!(
        parse_san_strict(&scholars, "Qf7#"),
        Err(SanError::Annotation { .. })
    ));
}

#[test]
fn classify_recomputes_ground_truth() {
    let scholars =
        Position::from_fen("r1bqkbnr/pppp1ppp/2n5/4p3/2B1P3/5Q2/PPPP1PPP/RNB1K1NR w KQkq - 4 4")
            .unwrap();
    let qxf7 = parse_san(&scholars, "Qxf7").unwrap();
    let class = scholars.classify(qxf7.key()).unwrap();
    assert_eq!(
        class.capture,
        Some((Piece::Pawn, Square::parse("f7").unwrap()))
    );
    assert!(class.gives_check);
    assert!(class.is_checkmate);

    let quiet = parse_san(&scholars, "Nc3").unwrap();
    let class = scholars.classify(quiet.key()).unwrap();
    assert_eq!(class.capture, None);
    assert!(!class.gives_check);
    assert!(!class.is_checkmate);

    // En-passant capture reports the victim square behind the target.
    let mut pos = Position::start();
    for san in ["e4", "a6", "e5", "d5"] {
        pos = pos.apply(&parse_san(&pos, san).unwrap());
    }
    let exd6 = parse_san(&pos, "exd6").unwrap();
    assert!(exd6.is_en_passant());
    let class = pos.classify(exd6.key()).unwrap();
    assert_eq!(
        class.capture,
        Some((Piece::Pawn, Square::parse("d5").unwrap()))
    );

    let illegal = pos.classify((
        Square::parse("a1").unwrap(),
        Square::parse("a8").unwrap(),
        None,
    ));
    assert!(matches!(illegal, Err(MoveError::NotLegal(_))));
}

#[test]
fn san_round_trip_over_random_playouts() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0usize;
    for _ in 0..60 {
        let mut pos = Position::start();
        for _ in 0..40 {
            let moves = pos.legal_moves();
            if moves.is_empty() {
                break;
            }
            for m in &moves {
                let san = pos.san(m);
                let parsed = parse_san_strict(&pos, &san)
                    .unwrap_or_else(|e| panic!("{} in {}: {e}", san, pos.fen()));
                assert_eq!(parsed, *m, "{} in {}", san, pos.fen());
                checked += 1;
            }
            pos = pos.apply(moves.choose(&mut rng).unwrap());
        }
    }
    assert!(checked > 10_000, "exercised {checked} moves");
}

#[test]
fn halfmove_and_fullmove_clocks_advance() {
    let mut pos = Position::start();
    for san in ["Nf3", "Nf6", "Ng1"] {
        pos = pos.apply(&parse_san(&pos, san).unwrap());
    }
    assert_eq!(pos.halfmove_clock(), 3);
    assert_eq!(pos.fullmove_number(), 2);
    pos = pos.apply(&parse_san(&pos, "d5").unwrap());
    assert_eq!(pos.halfmove_clock(), 0);
    assert_eq!(pos.fullmove_number(), 3);
}

#[test]
fn checkmate_and_stalemate_detection() {
    let fools = {
        let mut pos = Position::start();
        for san in ["f3", "e5", "g4", "Qh4#"] {
            pos = pos.apply(&parse_san(&pos, san).unwrap());
        }
        pos
    };
    assert!(fools.is_checkmate());
    assert!(!fools.is_stalemate());

    let stalemate = Position::from_fen("k7/8/1Q6/8/8/8/8/K7 b - - 0 1").unwrap();
    assert!(stalemate.is_stalemate());
    assert!(!stalemate.is_checkmate());
}
