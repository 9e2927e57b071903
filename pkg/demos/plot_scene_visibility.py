"""
Projecting a tabletop scene into two cameras
============================================

Sample a scene, project every object into each view and see which ones
survive the occlusion and size filters.
"""

from e2w.datagen import SceneConfig, sample_scene
from e2w.geometry import view_visibility, visible_view_counts

scene = sample_scene(SceneConfig(n_objects=(4, 6)), seed=3)
for o in scene.objects:
    print(o.id, o.class_name, [round(x, 3) for x in o.position])

# per-view boxes; the fraction is the share of the box not hidden by nearer objects
for vi in range(len(scene.views)):
    print(f"\nview {vi}")
    for e in view_visibility(scene, vi):
        mark = "visible" if e.visible else "hidden"
        print(f"  {e.object_id}: {[round(x, 1) for x in e.box.as_list()]} "
              f"depth={e.depth:.2f} frac={e.visible_fraction:.2f} {mark}")

# objects seen by both cameras are the ones a model has to de-duplicate
counts = visible_view_counts(scene)
print("\nseen in >= 2 views:", sorted(i for i, c in counts.items() if c >= 2))
