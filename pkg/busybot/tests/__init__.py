from hypothesis import settings

settings.register_profile("busybot", max_examples=25, deadline=None)
settings.load_profile("busybot")
