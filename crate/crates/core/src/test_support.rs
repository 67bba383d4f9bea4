use crate::data_space::{Catalog, DimensionalEntity, HeritageObject, Payload};

pub(crate) const SAMPLE_CATALOG: &str = include_str!("../fixtures/sample_catalog.json");

pub(crate) fn sample_catalog() -> Catalog {
    Catalog::from_json_str(SAMPLE_CATALOG, true).unwrap().catalog
}

pub(crate) fn entity(id: &str, payload: Payload) -> DimensionalEntity {
    DimensionalEntity {
        id: id.into(),
        dimension: payload.dimension(),
        label: id.into(),
        payload,
        r_min: None,
        r_max: None,
    }
}

pub(crate) fn object(id: &str, entities: &[&str]) -> HeritageObject {
    HeritageObject {
        id: id.into(),
        name: id.into(),
        description: String::new(),
        image_ref: None,
        entities: entities.iter().map(|s| s.to_string()).collect(),
    }
}

/// One object, one entity per dimension, no edges.
pub(crate) fn single_entity_catalog() -> Catalog {
    Catalog::new(
        vec![
            entity("chronos.c20", Payload::Century(20)),
            entity("topos.here", Payload::Territory("here".into())),
            entity("thema.only", Payload::Concept("only".into())),
        ],
        vec![object("ob", &["chronos.c20", "topos.here", "thema.only"])],
        vec![],
        vec![],
    )
    .unwrap()
}

/// A Thema hub linked to `leaves` leaf concepts.
pub(crate) fn star_catalog(leaves: usize) -> Catalog {
    let mut entities = vec![
        entity("chronos.c20", Payload::Century(20)),
        entity("topos.here", Payload::Territory("here".into())),
        entity("thema.hub", Payload::Concept("hub".into())),
    ];
    let mut edges = Vec::new();
    for k in 0..leaves {
        let id = format!("thema.leaf{k}");
        entities.push(entity(&id, Payload::Concept(format!("leaf{k}"))));
        edges.push(("thema.hub".to_string(), id));
    }
    Catalog::new(
        entities,
        vec![object("ob", &["chronos.c20", "topos.here", "thema.hub"])],
        vec![],
        edges,
    )
    .unwrap()
}
